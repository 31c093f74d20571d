#include "runner.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <algorithm>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

namespace pslab::runner {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::uint64_t kTagLemma = 0x4201;
constexpr std::uint64_t kTagTau = 0x7a0;
constexpr std::uint64_t kTagEnergy = 0xeb;
constexpr std::uint64_t kTagExp = 0xe4;
constexpr std::uint64_t kTagBounds = 0xb0;
constexpr std::uint64_t kTagScan = 0x5ca;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

json check(const std::string& name, json value, double threshold, bool pass) {
    json c;
    c["name"] = name;
    c["value"] = std::move(value);
    c["threshold"] = threshold;
    c["pass"] = pass;
    return c;
}

json finish(json checks) {
    bool all = true;
    for (const auto& c : checks) all = all && c["pass"].get<bool>();
    json body;
    body["checks"] = std::move(checks);
    body["pass"] = all;
    return body;
}

Vec random_symbol(const LocalizationFrame& frame, Rng& rng, double norm_lo, double norm_hi) {
    RVec a(frame.n_test), b(frame.n_test);
    for (int i = 0; i < frame.n_test; ++i) {
        a(i) = gaussian(rng);
        b(i) = gaussian(rng);
    }
    Vec f = weyl_symbol(frame, a, b);
    return f * (uniform(rng, norm_lo, norm_hi) / norm(frame.basis, f));
}

// Random plus/minus multiindices over K modes with total order `ord`.
std::pair<MultiIndex, MultiIndex> random_multiindex(int K, int ord, Rng& rng) {
    MultiIndex mp(K, 0), mm(K, 0);
    for (int k = 0; k < ord; ++k) {
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(K));
        if (rng() % 2) ++mp[j];
        else ++mm[j];
    }
    return {mp, mm};
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const std::exception&) {
        throw ConfigError(std::string("field '") + key + "': wrong type");
    }
}

void need_positive(double v, const char* field) {
    if (!(v > 0.0)) throw ConfigError(std::string("field '") + field + "' must be positive");
}

template <class T>
void need_increasing(const std::vector<T>& v, const char* field) {
    if (v.empty()) throw ConfigError(std::string("field '") + field + "' must not be empty");
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1])) throw ConfigError(std::string("field '") + field + "' must be strictly increasing");
}

}  // namespace

Config config_from_json(const json& j) {
    static const std::vector<std::string> known{"model", "seed", "samples", "N", "deltas", "lambdas", "Ls", "ns",
                                                "n_deltas", "radii", "beta", "delta", "quadrature_n",
                                                "eps_exponent", "image_points", "slot_sets", "measure_eta", "out_dir"};
    static const std::vector<std::string> known_model{"m", "p_max", "n_modes", "fock_p_max", "fock_n_modes",
                                                      "n_max", "r", "n_test", "E", "kappa"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ConfigError("unknown field '" + k + "'");
    Config c;
    if (j.contains("model")) {
        const json& m = j.at("model");
        if (!m.is_object()) throw ConfigError("field 'model' must be an object");
        for (const auto& [k, v] : m.items())
            if (std::find(known_model.begin(), known_model.end(), k) == known_model.end())
                throw ConfigError("unknown field 'model." + k + "'");
        read(m, "m", c.model.m);
        read(m, "p_max", c.model.p_max);
        read(m, "n_modes", c.model.n_modes);
        read(m, "fock_p_max", c.model.fock_p_max);
        read(m, "fock_n_modes", c.model.fock_n_modes);
        read(m, "n_max", c.model.n_max);
        read(m, "r", c.model.r);
        read(m, "n_test", c.model.n_test);
        read(m, "E", c.model.E);
        read(m, "kappa", c.model.kappa);
    }
    if (j.contains("seed")) {
        std::uint64_t s = 0;
        read(j, "seed", s);
        c.seed = s;
    }
    read(j, "samples", c.samples);
    read(j, "N", c.N);
    read(j, "deltas", c.deltas);
    read(j, "lambdas", c.lambdas);
    read(j, "Ls", c.Ls);
    read(j, "ns", c.ns);
    read(j, "n_deltas", c.n_deltas);
    read(j, "radii", c.radii);
    read(j, "beta", c.beta);
    read(j, "delta", c.delta);
    read(j, "quadrature_n", c.quadrature_n);
    read(j, "eps_exponent", c.eps_exponent);
    read(j, "image_points", c.image_points);
    read(j, "slot_sets", c.slot_sets);
    read(j, "measure_eta", c.measure_eta);
    read(j, "out_dir", c.out_dir);
    validate(c);
    return c;
}

Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const Config& c) {
    json m;
    m["m"] = c.model.m;
    m["p_max"] = c.model.p_max;
    m["n_modes"] = c.model.n_modes;
    m["fock_p_max"] = c.model.fock_p_max;
    m["fock_n_modes"] = c.model.fock_n_modes;
    m["n_max"] = c.model.n_max;
    m["r"] = c.model.r;
    m["n_test"] = c.model.n_test;
    m["E"] = c.model.E;
    m["kappa"] = c.model.kappa;
    json j;
    j["model"] = m;
    if (c.seed) j["seed"] = *c.seed;
    j["samples"] = c.samples;
    j["N"] = c.N;
    j["deltas"] = c.deltas;
    j["lambdas"] = c.lambdas;
    j["Ls"] = c.Ls;
    j["ns"] = c.ns;
    j["n_deltas"] = c.n_deltas;
    j["radii"] = c.radii;
    j["beta"] = c.beta;
    j["delta"] = c.delta;
    j["quadrature_n"] = c.quadrature_n;
    j["eps_exponent"] = c.eps_exponent;
    j["image_points"] = c.image_points;
    j["slot_sets"] = c.slot_sets;
    j["measure_eta"] = c.measure_eta;
    j["out_dir"] = c.out_dir;
    return j;
}

void validate(const Config& c) {
    need_positive(c.model.m, "model.m");
    need_positive(c.model.p_max, "model.p_max");
    need_positive(c.model.fock_p_max, "model.fock_p_max");
    need_positive(c.model.r, "model.r");
    need_positive(c.model.E, "model.E");
    need_positive(c.model.kappa, "model.kappa");
    if (c.model.n_modes < 3 || c.model.n_modes % 2 == 0) throw ConfigError("field 'model.n_modes' must be odd and >= 3");
    if (c.model.fock_n_modes < 3 || c.model.fock_n_modes % 2 == 0)
        throw ConfigError("field 'model.fock_n_modes' must be odd and >= 3");
    if (c.model.n_max < 1) throw ConfigError("field 'model.n_max' must be positive");
    if (c.model.n_test < 1) throw ConfigError("field 'model.n_test' must be positive");
    if (c.samples < 1) throw ConfigError("field 'samples' must be positive");
    if (c.N < 1) throw ConfigError("field 'N' must be positive");
    need_increasing(c.deltas, "deltas");
    need_increasing(c.lambdas, "lambdas");
    need_increasing(c.Ls, "Ls");
    need_increasing(c.ns, "ns");
    need_increasing(c.n_deltas, "n_deltas");
    need_increasing(c.radii, "radii");
    if (c.ns.size() != c.n_deltas.size()) throw ConfigError("fields 'ns' and 'n_deltas' must have equal length");
    for (double d : c.deltas) need_positive(d, "deltas");
    for (double r : c.radii) need_positive(r, "radii");
    for (double L : c.Ls) need_positive(L, "Ls");
    for (double l : c.lambdas)
        if (l < 0.0) throw ConfigError("field 'lambdas' must be non-negative");
    need_positive(c.beta, "beta");
    need_positive(c.delta, "delta");
    if (c.quadrature_n < 64) throw ConfigError("field 'quadrature_n' must be at least 64");
    if (!(c.eps_exponent > 0.0 && c.eps_exponent < 1.0)) throw ConfigError("field 'eps_exponent' must lie in (0, 1)");
    if (c.image_points < 1 || c.slot_sets < 1) throw ConfigError("fields 'image_points' and 'slot_sets' must be positive");
}

Session::Session(Config cfg) : cfg_(std::move(cfg)) { validate(cfg_); }

std::uint64_t Session::seed() const {
    if (!cfg_.seed) throw ConfigError("a seed is required for sampled experiments");
    return *cfg_.seed;
}

const ModeBasis& Session::basis() {
    if (!basis_)
        basis_ = std::make_unique<ModeBasis>(build_mode_basis(cfg_.model.m, cfg_.model.p_max, cfg_.model.n_modes));
    return *basis_;
}

const ModeBasis& Session::coarse_basis() {
    if (!coarse_)
        coarse_ = std::make_unique<ModeBasis>(
            build_mode_basis(cfg_.model.m, cfg_.model.fock_p_max, cfg_.model.fock_n_modes));
    return *coarse_;
}

const LocalizationFrame& Session::frame() {
    if (!frame_)
        frame_ = std::make_unique<LocalizationFrame>(
            build_localization_frame(basis(), cfg_.model.r, cfg_.model.n_test));
    return *frame_;
}

const TSpectrum& Session::spectrum() {
    if (!spec_) spec_ = std::make_unique<TSpectrum>(build_T_spectrum(frame(), cfg_.model.E, cfg_.model.kappa));
    return *spec_;
}

const EnergyWindow& Session::window() {
    if (!window_) window_ = std::make_unique<EnergyWindow>(build_energy_window(basis(), cfg_.model.E));
    return *window_;
}

json number(double value, const std::string& kind, double eta, long samples) {
    json n;
    n["value"] = value;
    n["kind"] = kind;
    n["eta"] = eta;
    n["samples"] = samples;
    return n;
}

namespace {

// ---- verify suites ----

json verify_lemma42(Session& s) {
    const auto t0 = Clock::now();
    const Config& c = s.config();
    const EnergyWindow& w = s.window();
    const int instances = 5, functionals = 20;
    json checks = json::array();
    double worst = 0.0, worst_diff = 0.0, worst_fock = 0.0, scale = 0.0;
    double worst_ratio = 0.0;
    for (int i = 0; i < instances; ++i) {
        Rng rng = make_rng(s.seed(), kTagLemma, static_cast<std::uint64_t>(i));
        std::vector<Vec> fs;
        for (int k = 0; k < c.N; ++k) fs.push_back(random_symbol(s.frame(), rng, 0.5, 1.5));
        const AdmissibleConfig cfg = sample_admissible(c.N, 1.0, c.model.r, 25.0, rng);
        std::vector<EnergyFunctional> phis;
        for (int j = 0; j < functionals; ++j)
            phis.push_back(sample_energy_functional(w.dim(), w.E, s.seed() ^ kTagLemma,
                                                    static_cast<std::uint64_t>(i * functionals + j)));
        const SVanishing sv = s_vanishing_check(w, fs, cfg.xs, phis);
        worst = std::max(worst, sv.residual);
        worst_ratio = std::max(worst_ratio, sv.residual / sv.scale);
        worst_diff = std::max(worst_diff, sv.route_diff);
        scale = std::max(scale, sv.scale);
        const Mat pf = s_product_fock(w, fs, cfg.xs, c.model.n_max);
        const Mat pw = s_product_window(w, fs, cfg.xs);
        worst_fock = std::max(worst_fock, op_norm(Mat(pf - pw)));
    }
    const long n = static_cast<long>(instances) * functionals;
    checks.push_back(check("S residual / scale", number(worst_ratio, "exact", 0.0, n), 1e-10, worst_ratio <= 1e-10));
    checks.push_back(check("S residual", number(worst, "exact", 0.0, n), 1e-10 * scale, worst <= 1e-10 * scale));
    checks.push_back(check("alternating sum vs M-map product", number(worst_diff, "exact", 0.0, n), 1e-12,
                           worst_diff <= 1e-12));
    checks.push_back(check("window vs Fock M-map product", number(worst_fock, "exact", 0.0, instances), 1e-12,
                           worst_fock <= 1e-12));
    json body = finish(std::move(checks));
    body["scale"] = scale;
    body["functionals"] = n;
    body["timing"] = {{"seconds", seconds_since(t0)}};
    return body;
}

json verify_claim(Session& s) {
    const Config& c = s.config();
    const DampingParams p = make_damping(c.beta, c.delta);
    json checks = json::array();
    const double gam = p.gamma();
    const std::vector<double> poles{gam, -gam, M_PI - gam, -M_PI + gam};
    double bmax = 0.0;
    int pts = 0;
    for (int k = 0; k < 1000; ++k) {
        const double phi = -M_PI + (k + 0.5) * 2.0 * M_PI / 1000.0;
        bool near = false;
        for (double q : poles) near = near || std::abs(phi - q) < 1e-3;
        if (near) continue;
        ++pts;
        bmax = std::max(bmax, std::abs(conformal_map(p, std::polar(1.0, phi)).real() - g_function(p, phi)));
    }
    checks.push_back(check("boundary |Re z - g|", number(bmax, "exact", 0.0, pts), 1e-9, bmax <= 1e-9));
    const double g0 = std::abs(g_function(p, 0.0) - c.delta);
    const double gpi = std::abs(g_function(p, M_PI) + c.delta);
    checks.push_back(check("|g(0) - delta|", number(g0, "exact"), 1e-12, g0 <= 1e-12));
    checks.push_back(check("|g(pi) + delta|", number(gpi, "exact"), 1e-12, gpi <= 1e-12));
    const QuadResult cm = cauchy_disc_mean(p, 0.9);
    checks.push_back(check("disc mean of z^2 at r = 0.9", number(std::abs(cm.value), "quadrature", cm.err, cm.evals),
                           1e-9 + cm.err, std::abs(cm.value) <= 1e-9 + cm.err));
    const int instances = 20;
    std::vector<double> res(instances), qerr(instances);
    parallel_for(instances, [&](int i) {
        const TensorInstance t = sample_tensor_instance(4, 4, s.seed(), static_cast<std::uint64_t>(i));
        const ClaimResidual r = verify_claim_identity(t.A, t.B, t.H, p, t.psi1, t.psi2, c.quadrature_n);
        res[i] = r.residual;
        qerr[i] = r.quad_err;
    });
    double worst = 0.0, werr = 0.0;
    for (int i = 0; i < instances; ++i) {
        worst = std::max(worst, res[i]);
        werr = std::max(werr, qerr[i]);
    }
    checks.push_back(check("claim identity residual", number(worst, "quadrature", werr, instances), 1e-7,
                           worst <= 1e-7));
    return finish(std::move(checks));
}

json verify_taudual(Session& s) {
    const ModeBasis& b = s.basis();
    const TSpectrum& sp = s.spectrum();
    const int K = static_cast<int>(sp.t.size());
    const int cases = 50;
    std::vector<double> diff(cases), eta(cases), ratio(cases);
    parallel_for(cases, [&](int i) {
        Rng rng = make_rng(s.seed(), kTagTau, static_cast<std::uint64_t>(i));
        const auto [mp, mm] = random_multiindex(K, i % 4, rng);
        const Vec f = random_symbol(s.frame(), rng, 0.05, 1.0);
        const cd fo = tau_formula(b, sp, mp, mm, f);
        const Measured br = tau_bruteforce(b, sp, mp, mm, f);
        diff[i] = std::abs(fo - br.value);
        eta[i] = br.eta;
        ratio[i] = tau_norm(mp, mm) / tau_norm_bound(mp, mm);
    });
    double worst_excess = -std::numeric_limits<double>::infinity(), wd = 0.0, we = 0.0, wr = 0.0;
    for (int i = 0; i < cases; ++i) {
        worst_excess = std::max(worst_excess, diff[i] - (1e-8 + eta[i]));
        wd = std::max(wd, diff[i]);
        we = std::max(we, eta[i]);
        wr = std::max(wr, ratio[i]);
    }
    // tensor version, two slots
    const int tcases = 6;
    double td = 0.0, te = 0.0, tr = 0.0;
    for (int i = 0; i < tcases; ++i) {
        Rng rng = make_rng(s.seed(), kTagTau + 1, static_cast<std::uint64_t>(i));
        MultiIndexBundle mu = zero_bundle(2, K);
        for (int slot = 0; slot < 2; ++slot) {
            const auto [mp, mm] = random_multiindex(K, 1 + (i + slot) % 2, rng);
            mu.plus[slot] = mp;
            mu.minus[slot] = mm;
        }
        const std::vector<Vec> fs{random_symbol(s.frame(), rng, 0.05, 1.0),
                                  translate(b, random_symbol(s.frame(), rng, 0.05, 1.0), 0.0, 2.0)};
        const cd fo = tau_tensor_formula(b, sp, mu, fs);
        const Measured br = tau_tensor_bruteforce(b, sp, mu, fs);
        if (std::abs(fo - br.value) - br.eta > td - te) {
            td = std::abs(fo - br.value);
            te = br.eta;
        }
        tr = std::max(tr, tau_tensor_norm(mu) / tau_tensor_norm_bound(mu));
    }
    json checks = json::array();
    checks.push_back(check("formula vs Fock |diff|", number(wd, "exact", we, cases), 1e-8 + we,
                           worst_excess <= 0.0));
    checks.push_back(check("norm / bound", number(wr, "exact", 0.0, cases), 1.0, wr <= 1.0));
    checks.push_back(check("tensor formula vs Fock", number(td, "exact", te, tcases), 1e-8 + te, td <= 1e-8 + te));
    checks.push_back(check("tensor norm / bound", number(tr, "exact", 0.0, tcases), 1.0, tr <= 1.0));
    return finish(std::move(checks));
}

json verify_energybounds(Session& s) {
    const ModeBasis& b = s.coarse_basis();
    const double E = 3.5;  // three particles fit below E on the coarse grid
    const ModeSet ms = all_grid_modes(b);
    const FockBasis fb = build_fock(ms, 3, E);
    const double ME = E / b.m;
    json checks = json::array();
    json per_n = json::array();
    bool all = true;
    for (int n = 1; n <= 3; ++n) {
        const int instances = 50;
        std::vector<double> ratio(instances);
        parallel_for(instances, [&](int i) {
            Rng rng = make_rng(s.seed(), kTagEnergy + n, static_cast<std::uint64_t>(i));
            SpMat prod(fb.dim, fb.dim);
            prod.setIdentity();
            double bound = std::pow(ME, 0.5 * n);
            for (int k = 0; k < n; ++k) {
                Vec f(b.n_modes);
                const double width = (i % 2) ? 0.6 : 6.0;  // odd instances concentrate near p = 0
                for (int q = 0; q < b.n_modes; ++q) f(q) = complex_gaussian(rng) * std::exp(-std::pow(b.p(q) / width, 2));
                f *= uniform(rng, 0.2, 2.0) / norm(b, f);
                bound *= norm(b, f);
                prod = prod * annihilator(fb, coords(ms, f));
            }
            ratio[i] = op_norm(Mat(prod)) / bound;
        });
        double worst = 0.0;
        for (double r : ratio) worst = std::max(worst, r);
        all = all && worst <= 1.0;
        checks.push_back(check("|a(f_1)...a(f_n) P_E| / bound, n = " + std::to_string(n),
                               number(worst, "exact", 0.0, instances), 1.0, worst <= 1.0));
    }
    json body = finish(std::move(checks));
    body["E"] = E;
    body["fock_dim"] = fb.dim;
    return body;
}

json verify_expansions(Session& s) {
    const ModeBasis& b = s.basis();
    const LocalizationFrame& fr = s.frame();
    const TSpectrum& sp = s.spectrum();
    const EnergyWindow& w = s.window();
    const double sep = 2.0 * s.config().model.r + 1.0;
    json checks = json::array();
    Rng rng = make_rng(s.seed(), kTagExp, 0);

    // summunu
    double sres = 0.0, sscale = 0.0;
    long sterms = 0;
    const std::vector<double> xs3{0.0, sep, 2.0 * sep};
    const SContext ctx = make_s_context(w, fr, sp, xs3);
    for (int i = 0; i < 3; ++i) {
        std::vector<Vec> fs;
        for (int k = 0; k < 3; ++k) fs.push_back(random_symbol(fr, rng, 0.3, 1.2));
        const auto phi = sample_energy_functional(w.dim(), w.E, s.seed() ^ kTagExp, static_cast<std::uint64_t>(i));
        const IdentityCheck r = check_summunu(ctx, fs, phi);
        sres = std::max(sres, r.residual);
        sscale = std::max(sscale, r.scale);
        sterms += r.terms;
    }
    checks.push_back(check("summunu residual", number(sres, "exact", 0.0, 3), 1e-8, sres <= 1e-8));

    // expo11
    double eres = 0.0, etail = 0.0, excess = -1.0;
    for (int M = 2; M <= 3; ++M) {
        std::vector<Vec> fs;
        std::vector<double> xs;
        for (int k = 0; k < M; ++k) {
            fs.push_back(random_symbol(fr, rng, 0.3, 1.2));
            xs.push_back(k * sep);
        }
        const IdentityCheck r = check_expo11(b, fr, sp, fs, xs, 8);
        eres = std::max(eres, r.residual);
        etail = std::max(etail, r.tail);
        excess = std::max(excess, r.residual - (1e-8 + r.tail));
    }
    checks.push_back(check("expo11 residual (degree 8)", number(eres, "exact", etail, 2), 1e-8 + etail,
                           excess <= 0.0));

    // creation1
    double cres = 0.0;
    for (int i = 0; i < 2; ++i) {
        const Vec f = random_symbol(fr, rng, 0.3, 1.0);
        for (int sign : {1, -1}) cres = std::max(cres, check_creation1(b, fr, sp, f, sign, 3).residual);
    }
    checks.push_back(check("creation1 residual (m <= 3)", number(cres, "exact", 0.0, 4), 1e-10, cres <= 1e-10));

    // Weyl calculus
    double vac = 0.0, nrm = 0.0, eta = 0.0;
    const int wc = 10;
    for (int i = 0; i < wc; ++i) {
        const Vec f = random_symbol(fr, rng, 0.05, 1.0);
        const Vec g = translate(b, random_symbol(fr, rng, 0.05, 1.0), 0.0, sep);
        const WeylCalculus r = weyl_calculus_check(b, f, {g}, 12);
        vac = std::max(vac, r.vacuum_err);
        nrm = std::max(nrm, r.normal_err);
        eta = std::max(eta, r.eta);
    }
    checks.push_back(check("|<W(f)> - exp(-|f|^2/2)|", number(vac, "exact", eta, wc), 1e-6, vac <= 1e-6));
    checks.push_back(check("|W(f) - exp(-|f|^2/2) :W(f):| on the low block", number(nrm, "exact", eta, wc), 1e-6,
                           nrm <= 1e-6));
    checks.push_back(check("truncation change eta", number(eta, "exact", 0.0, wc), 1e-6, eta <= 1e-6));
    json body = finish(std::move(checks));
    body["summunu_terms"] = sterms;
    body["summunu_scale"] = sscale;
    return body;
}

json verify_bounds(Session& s) {
    const Config& c = s.config();
    const LocalizationFrame& fr = s.frame();
    const TSpectrum& sp = s.spectrum();
    const EnergyWindow& w = s.window();
    const double ME = c.model.E / c.model.m;
    const int K = static_cast<int>(sp.t.size());
    json checks = json::array();

    // decay of the two-point correlation
    RVec d(21), v(21);
    for (int i = 0; i < 21; ++i) {
        d(i) = (5.0 + 0.5 * i) / c.model.m;
        v(i) = std::abs(two_point_correlation(fr, sp, 0, 0, d(i), 0.0, 1));
    }
    const SlopeFit fit = fit_log_slope(d, v);
    const double rel = std::abs(fit.slope + c.model.m) / c.model.m;
    checks.push_back(check("log-slope of |<L+e_x|L+e_y>| over d in [5, 15] (relative error vs -m)",
                           number(fit.slope, "exact", 0.0, 21), 0.15, rel <= 0.15));

    // bound chain on random instances at delta = 1
    const double delta = 1.0;
    const double g = measure_g(fr, sp, delta);
    const double sep = 2.0 * c.model.r + delta;
    const std::vector<double> xs{0.0, sep, 2.0 * sep};
    const SContext ctx = make_s_context(w, fr, sp, xs);
    const double slack = 1.0 + 1e-12;
    double mu_r = 0.0, f_r = 0.0, fm_r = 0.0, s_r = 0.0;
    const int inst = 10;
    for (int i = 0; i < inst; ++i) {
        Rng rng = make_rng(s.seed(), kTagBounds, static_cast<std::uint64_t>(i));
        MultiIndexBundle mu = zero_bundle(3, K), nu = zero_bundle(3, K);
        // |mu|, |nu| <= E/m = 1.2 leaves order 0 or 1
        const int slot_mu = static_cast<int>(rng() % 3), slot_nu = static_cast<int>(rng() % 3);
        const auto [mp, mm] = random_multiindex(K, static_cast<int>(rng() % 2), rng);
        mu.plus[slot_mu] = mp;
        mu.minus[slot_mu] = mm;
        const auto [np, nm] = random_multiindex(K, static_cast<int>(rng() % 2), rng);
        nu.plus[slot_nu] = np;
        nu.minus[slot_nu] = nm;
        PairBundle a = zero_pairs(3, K), bb = zero_pairs(3, K);
        const int ord = 1 + static_cast<int>(rng() % 2);
        for (int k = 0; k < ord; ++k) {
            const int p = static_cast<int>(rng() % static_cast<std::uint64_t>(a.pairs()));
            const int mode_a = static_cast<int>(rng() % static_cast<std::uint64_t>(K));
            const int mode_b = static_cast<int>(rng() % static_cast<std::uint64_t>(K));
            if (rng() % 2) {
                ++a.plus[p][mode_a];
                ++bb.plus[p][mode_b];
            } else {
                ++a.minus[p][mode_a];
                ++bb.minus[p][mode_b];
            }
        }
        const auto phi = sample_energy_functional(w.dim(), w.E, s.seed() ^ kTagBounds, static_cast<std::uint64_t>(i));
        const double me = std::abs(monomial_expectation(ctx, mu, nu, phi));
        mu_r = std::max(mu_r, me / mu_bound(sp, mu, nu, ME));
        const double F = std::abs(f_correlation(ctx.grams, a, bb));
        const FBound fb = f_bound(sp, a, bb, g);
        f_r = std::max(f_r, F / fb.per_pair);
        fm_r = std::max(fm_r, F / fb.merged);
        s_r = std::max(s_r, std::abs(s_functional(ctx, mu, nu, a, bb, phi)) / s_bound(sp, mu, nu, a, bb, ME, g));
    }
    checks.push_back(check("|phi(a*^mu a^nu)| / bound", number(mu_r, "exact", 0.0, inst), 1.0, mu_r <= slack));
    checks.push_back(check("|F| / per-pair bound", number(f_r, "exact", 0.0, inst), 1.0, f_r <= slack));
    checks.push_back(check("|F| / merged bound", number(fm_r, "exact", 0.0, inst), 1.0, fm_r <= slack));
    checks.push_back(check("|S| / bound", number(s_r, "exact", 0.0, inst), 1.0, s_r <= slack));

    // tau norms
    double tr = 0.0;
    for (int i = 0; i < 20; ++i) {
        Rng rng = make_rng(s.seed(), kTagBounds + 1, static_cast<std::uint64_t>(i));
        const auto [mp, mm] = random_multiindex(K, i % 4, rng);
        tr = std::max(tr, tau_norm(mp, mm) / tau_norm_bound(mp, mm));
    }
    checks.push_back(check("tau norm / bound", number(tr, "exact", 0.0, 20), 1.0, tr <= slack));

    json body = finish(std::move(checks));
    json series = json::array();
    for (double dl : c.deltas) {
        const double gd = measure_g(fr, sp, dl);
        const SeriesBound sb = series_bound(sp.trace_norm, c.N, ME, gd);
        json row;
        row["delta"] = dl;
        row["g"] = number(gd, "exact");
        row["ratio"] = sb.ratio;
        row["divergent"] = sb.divergent;
        row["majorant"] = number(sb.divergent ? kNaN : sb.value, "exact");
        series.push_back(row);
    }
    body["series"] = series;
    body["trace_norm_T"] = sp.trace_norm;
    body["kept_modes"] = K;
    return body;
}

// ---- scans ----

json scan_row(double parameter, json estimate, json bound, long samples, double eta) {
    json r;
    r["parameter"] = parameter;
    r["estimate"] = std::move(estimate);
    r["bound"] = std::move(bound);
    r["samples"] = samples;
    r["eta"] = eta;
    return r;
}

json scan_pinorm(Session& s) {
    const Config& c = s.config();
    json rows = json::array();
    std::vector<double> best;
    for (double d : c.deltas) {
        const PiNormEntry e = pi_norm_estimate(s.window(), s.frame(), c.N, d, c.samples, s.seed());
        best.push_back(e.best);
        json r = scan_row(d, number(e.best, "lower-bound", 0.0, c.samples), nullptr, c.samples, 0.0);
        r["best_index"] = e.best_index;
        r["best_phi"] = number(e.best_phi, "lower-bound", 0.0, 16);
        rows.push_back(r);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < best.size(); ++i) monotone = monotone && best[i] <= best[i - 1];
    json body;
    body["parameter"] = "delta";
    body["N"] = c.N;
    body["E"] = c.model.E;
    body["rows"] = rows;
    body["non_increasing"] = monotone;
    body["drop"] = best.back() > 0.0 ? best.front() / best.back() : std::numeric_limits<double>::infinity();
    return body;
}

json scan_epscontent(Session& s) {
    const Config& c = s.config();
    json rows = json::array();
    double eps = 0.0;
    for (std::size_t i = 0; i < c.deltas.size(); ++i) {
        const Mat img = form_image(s.window(), s.frame(), c.N, c.deltas[i], c.image_points, c.slot_sets, s.seed());
        const double diam = diameter(img);
        if (i == 0) eps = diam / 10.0;
        const int content = epsilon_content(img, eps);
        json r = scan_row(c.deltas[i], number(content, "exact", 0.0, c.image_points), nullptr, c.image_points, 0.0);
        r["diameter"] = number(diam, "lower-bound", 0.0, static_cast<long>(c.image_points) * c.slot_sets);
        rows.push_back(r);
    }
    json body;
    body["parameter"] = "delta";
    body["eps"] = eps;
    body["rows"] = rows;
    return body;
}

json scan_clustering(Session& s) {
    const Config& c = s.config();
    Rng rng = make_rng(s.seed(), kTagScan, 1);
    const Vec f = random_symbol(s.frame(), rng, 0.8, 1.0);
    const Vec g = random_symbol(s.frame(), rng, 0.8, 1.0);
    const auto res = clustering_experiment(s.basis(), f, g, c.lambdas, 12);
    json rows = json::array();
    double worst_excess = -1.0;
    for (const auto& r : res) {
        const double diff = std::abs(r.closed - r.trace.value);
        worst_excess = std::max(worst_excess, diff - (1e-8 + r.trace.eta));
        json row = scan_row(r.lambda, number(std::abs(r.closed), "exact"), nullptr, 1, r.trace.eta);
        row["trace"] = number(std::abs(r.trace.value), "exact", r.trace.eta);
        row["route_diff"] = diff;
        rows.push_back(row);
    }
    json body;
    body["parameter"] = "lambda";
    body["rows"] = rows;
    body["routes_agree"] = worst_excess <= 0.0;
    return body;
}

json scan_averaging(Session& s) {
    const Config& c = s.config();
    Rng rng = make_rng(s.seed(), kTagScan, 2);
    const Slot A = normalized(s.basis(), hermitian_slot(random_symbol(s.frame(), rng, 0.6, 1.0)));
    json rows = json::array();
    bool dominated = true;
    for (std::size_t i = 0; i < c.ns.size(); ++i) {
        const AveragingEntry e =
            averaging_experiment(s.window(), A, c.ns[i], c.n_deltas[i], c.model.r, 2, 16, s.seed());
        dominated = dominated && e.measured <= e.bound && e.exact_sup <= e.bound;
        json row = scan_row(c.ns[i], number(e.measured, "lower-bound", 0.0, e.samples), number(e.bound, "exact"),
                            e.samples, 0.0);
        row["delta"] = e.delta;
        row["exact_sup"] = number(e.exact_sup, "exact");
        row["sup_term"] = number(e.sup_term, "exact");
        row["remainder"] = number(e.remainder, "exact");
        rows.push_back(row);
    }
    json body;
    body["parameter"] = "n";
    body["power"] = 2;
    body["rows"] = rows;
    body["bound_dominates"] = dominated;
    return body;
}

json scan_ppp(Session& s) {
    const Config& c = s.config();
    Rng rng = make_rng(s.seed(), kTagScan, 3);
    const Vec f = random_symbol(s.frame(), rng, 0.6, 1.0);
    Vec h = random_symbol(s.frame(), rng, 1.0, 1.0);
    h /= norm(s.basis(), h);
    const auto res = ppp_averaging(s.basis(), f, h, c.Ls, c.eps_exponent);
    // spot check of the integrand against a Fock space evaluation
    double eta = 0.0, diff = 0.0;
    for (double x : {0.0, 2.0, 7.5}) {
        const Measured m = one_particle_expectation_fock(s.basis(), f, h, 1.0, x, 12);
        eta = std::max(eta, m.eta);
        diff = std::max(diff, std::abs(m.value.real() - one_particle_expectation(s.basis(), f, h, 1.0, x)));
    }
    json rows = json::array();
    for (const auto& r : res) {
        json row = scan_row(r.L, number(r.deviation, "quadrature", 0.0, kPppPoints * kPppPoints), nullptr,
                            kPppPoints * kPppPoints, eta);
        row["average"] = r.average;
        rows.push_back(row);
    }
    json body;
    body["parameter"] = "L";
    body["eps_exponent"] = c.eps_exponent;
    body["rows"] = rows;
    body["integrand_route_diff"] = diff;
    return body;
}

json scan_sharp(Session& s) {
    const Config& c = s.config();
    Rng rng = make_rng(s.seed(), kTagScan, 4);
    const Vec f = random_symbol(s.frame(), rng, 0.6, 1.0);
    const double q = 1.0;
    const double p0 = std::sqrt(q * q + c.model.m * c.model.m);
    const auto res = sharp_momentum_experiment(s.basis(), p0, q, c.radii, f);
    json rows = json::array();
    for (const auto& r : res) {
        json row = scan_row(r.radius, number(r.sup, "exact", 0.0, 1), nullptr, 1, 0.0);
        row["states"] = r.dim;
        row["vacuum_only"] = r.vacuum_only;
        rows.push_back(row);
    }
    json body;
    body["parameter"] = "radius";
    body["p"] = {p0, q};
    body["rows"] = rows;
    return body;
}

}  // namespace

json run_verify(const std::string& name, Session& s) {
    if (name == "lemma42") return verify_lemma42(s);
    if (name == "claim") return verify_claim(s);
    if (name == "taudual") return verify_taudual(s);
    if (name == "energybounds") return verify_energybounds(s);
    if (name == "expansions") return verify_expansions(s);
    if (name == "bounds") return verify_bounds(s);
    throw ConfigError("unknown verify suite '" + name + "'");
}

json run_scan(const std::string& name, Session& s) {
    if (name == "pinorm") return scan_pinorm(s);
    if (name == "epscontent") return scan_epscontent(s);
    if (name == "clustering") return scan_clustering(s);
    if (name == "averaging") return scan_averaging(s);
    if (name == "ppp") return scan_ppp(s);
    if (name == "sharp") return scan_sharp(s);
    throw ConfigError("unknown scan '" + name + "'");
}

json env_stamp() {
    json e;
    e["program"] = "pslab 0.1.0";
#if defined(__clang__)
    e["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
    e["compiler"] = std::string("gcc ") + __VERSION__;
#else
    e["compiler"] = "unknown";
#endif
    e["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
    e["cxx"] = static_cast<long>(__cplusplus);
#ifdef NDEBUG
    e["build"] = "release";
#else
    e["build"] = "debug";
#endif
    return e;
}

json document(const std::string& command, const std::string& name, const Session& s, json body) {
    json d;
    d["schema"] = kSchema;
    d["command"] = command;
    d["name"] = name;
    d["env"] = env_stamp();
    d["seed"] = s.config().seed ? json(*s.config().seed) : json(nullptr);
    d["config"] = config_to_json(s.config());
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    d["timestamp"] = buf;
    d["result"] = std::move(body);
    return d;
}

json strip_volatile(json doc) {
    doc.erase("timestamp");
    if (doc.contains("result")) doc["result"].erase("timing");
    return doc;
}

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double value_of(const json& n) {
    if (n.is_null()) return kNaN;
    if (n.is_object()) return n.contains("value") && !n["value"].is_null() ? n["value"].get<double>() : kNaN;
    return n.get<double>();
}

}  // namespace

std::string scan_csv(const json& doc) {
    const json& body = doc.contains("result") ? doc["result"] : doc;
    std::ostringstream os;
    os << "parameter,estimate,bound,samples,eta\n";
    for (const auto& r : body["rows"]) {
        os << fmt(r["parameter"].get<double>()) << ',' << fmt(value_of(r["estimate"])) << ','
           << fmt(value_of(r["bound"])) << ',' << r["samples"].get<long>() << ',' << fmt(r["eta"].get<double>())
           << '\n';
    }
    return os.str();
}

namespace {

const char* property_of(const std::string& name) {
    if (name == "lemma42") return "partition sum of normal-ordered Weyl expectations vanishes for N > 2E/m";
    if (name == "claim") return "conformal map boundary values and the smeared commutator identity";
    if (name == "taudual") return "closed form of the tau functionals vs Fock evaluation, norm bound";
    if (name == "energybounds") return "|a(f_1)...a(f_n) P_E| <= (E/m)^{n/2} prod |f_i|";
    if (name == "expansions") return "multiindex expansions and W(f) = exp(-|f|^2/2) :W(f):";
    if (name == "bounds") return "correlation decay and the majorant chain";
    if (name == "pinorm") return "|P_E A_1(x_1)...A_N(x_N) P_E| decays as the time window grows";
    if (name == "epscontent") return "eps-content of the sampled form image collapses to 1";
    if (name == "clustering") return "vacuum correlations of centered Weyl operators vanish at large distance";
    if (name == "averaging") return "site averages are dominated by the coincidence majorant";
    if (name == "ppp") return "space-time averages of a one-particle state approach the vacuum value";
    if (name == "sharp") return "states of sharp energy-momentum look like the vacuum locally";
    return "";
}

}  // namespace

std::string report(const std::vector<json>& docs) {
    std::ostringstream os;
    os << "# pslab results\n\n";
    os << "| command | name | property | status |\n|---|---|---|---|\n";
    for (const auto& d : docs) {
        const std::string cmd = d.value("command", "");
        const std::string name = d.value("name", "");
        std::string status = "-";
        if (cmd == "verify") status = d["result"].value("pass", false) ? "PASS" : "FAIL";
        os << "| " << cmd << " | " << name << " | " << property_of(name) << " | " << status << " |\n";
    }
    for (const auto& d : docs) {
        const std::string cmd = d.value("command", "");
        const std::string name = d.value("name", "");
        const json& r = d["result"];
        os << "\n## " << cmd << ' ' << name << "\n\n";
        if (d.contains("seed") && !d["seed"].is_null()) os << "seed " << d["seed"].get<std::uint64_t>() << "\n\n";
        if (cmd == "verify") {
            os << "| check | value | kind | eta | threshold | pass |\n|---|---|---|---|---|---|\n";
            for (const auto& c : r["checks"]) {
                os << "| " << c["name"].get<std::string>() << " | " << fmt(value_of(c["value"])) << " | "
                   << c["value"]["kind"].get<std::string>() << " | " << fmt(c["value"]["eta"].get<double>()) << " | "
                   << fmt(c["threshold"].get<double>()) << " | " << (c["pass"].get<bool>() ? "yes" : "no") << " |\n";
            }
        } else {
            os << "| " << r.value("parameter", "parameter") << " | estimate | bound | samples | eta |\n"
               << "|---|---|---|---|---|\n";
            for (const auto& row : r["rows"]) {
                os << "| " << fmt(row["parameter"].get<double>()) << " | " << fmt(value_of(row["estimate"])) << " | "
                   << fmt(value_of(row["bound"])) << " | " << row["samples"].get<long>() << " | "
                   << fmt(row["eta"].get<double>()) << " |\n";
            }
        }
    }
    return os.str();
}

std::vector<json> run_suite(Session& s) {
    std::vector<json> out;
    for (const auto& n : kVerifyNames) out.push_back(document("verify", n, s, run_verify(n, s)));
    for (const auto& n : kScanNames) out.push_back(document("scan", n, s, run_scan(n, s)));
    return out;
}

}  // namespace pslab::runner
