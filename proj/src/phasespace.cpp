#include "pslab/phasespace.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace pslab {

namespace {

constexpr std::uint64_t kTagPinorm = 0x9100;
constexpr std::uint64_t kTagImage = 0x1ae9;
constexpr std::uint64_t kTagPhi = 0xf1;

double period(const ModeBasis& basis) { return 2.0 * M_PI / basis.dp; }

int popcount(unsigned v) { return std::popcount(v); }

}  // namespace

bool is_admissible(const AdmissibleConfig& cfg) {
    const double s = 2.0 * cfg.r + cfg.delta;
    for (int i = 0; i < cfg.size(); ++i)
        for (int j = i + 1; j < cfg.size(); ++j)
            if (std::abs(cfg.xs[i] - cfg.xs[j]) < s * (1.0 - 1e-12)) return false;
    return true;
}

bool cones_spacelike(double x1, double x2, double t, double r, int grid) {
    // |tau| + |xi| < r  <=>  |tau + xi| < r and |tau - xi| < r
    const double edge = r * (1.0 - 1e-9);
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const double u = -edge + 2.0 * edge * i / (grid - 1);
            const double v = -edge + 2.0 * edge * j / (grid - 1);
            pts.emplace_back(0.5 * (u + v), 0.5 * (u - v));
        }
    }
    for (const auto& [t1, y1] : pts) {
        for (const auto& [t2, y2] : pts) {
            const double dt = (t2 + t) - t1;
            const double dx = (y2 + x2) - (y1 + x1);
            if (dx * dx - dt * dt <= 0.0) return false;
        }
    }
    return true;
}

bool admissible_by_sampling(const AdmissibleConfig& cfg, int t_samples, int grid) {
    const double tmax = cfg.delta * (1.0 - 1e-9);
    for (int i = 0; i < cfg.size(); ++i) {
        for (int j = 0; j < cfg.size(); ++j) {
            if (i == j) continue;
            for (int k = 0; k < t_samples; ++k) {
                const double t = t_samples == 1 ? 0.0 : -tmax + 2.0 * tmax * k / (t_samples - 1);
                if (!cones_spacelike(cfg.xs[i], cfg.xs[j], t, cfg.r, grid)) return false;
            }
        }
    }
    return true;
}

AdmissibleConfig sample_admissible(int N, double delta, double r, double window, Rng& rng) {
    if (N < 1) throw ConfigError("need at least one site");
    const double s = 2.0 * r + delta;
    const double slack = window - (N - 1) * s;
    if (slack < 0.0) throw GeometryError("window too small for " + std::to_string(N) + " sites");
    std::vector<double> u(N);
    for (auto& v : u) v = uniform(rng, 0.0, slack);
    std::sort(u.begin(), u.end());
    AdmissibleConfig cfg{std::vector<double>(N), delta, r};
    for (int i = 0; i < N; ++i) cfg.xs[i] = u[i] + i * s;
    for (int i = N - 1; i > 0; --i) {
        const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(cfg.xs[i], cfg.xs[j]);
    }
    return cfg;
}

AdmissibleConfig equally_spaced(int N, double delta, double r, double offset) {
    AdmissibleConfig cfg{std::vector<double>(N), delta, r};
    for (int i = 0; i < N; ++i) cfg.xs[i] = offset + i * (2.0 * r + delta);
    return cfg;
}

double slot_norm_bound(const ModeBasis& basis, const Slot& s) {
    double b = 0.0;
    for (const auto& t : s.terms) b += std::abs(t.coeff) * (1.0 + std::exp(-0.5 * std::pow(norm(basis, t.f), 2)));
    return b;
}

Slot normalized(const ModeBasis& basis, Slot s) {
    const double b = slot_norm_bound(basis, s);
    if (b > 0.0)
        for (auto& t : s.terms) t.coeff /= b;
    return s;
}

Slot single_weyl_slot(const Vec& f, cd coeff) { return Slot{{WeylTerm{coeff, f}}}; }

Slot hermitian_slot(const Vec& f) { return Slot{{WeylTerm{0.5, f}, WeylTerm{0.5, -f}}}; }

Slot sample_slot(const LocalizationFrame& frame, Rng& rng, const SlotSampling& opt) {
    const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(opt.max_terms));
    Slot s;
    for (int k = 0; k < n; ++k) {
        RVec a(frame.n_test), b(frame.n_test);
        for (int i = 0; i < frame.n_test; ++i) {
            a(i) = gaussian(rng);
            b(i) = gaussian(rng);
        }
        Vec f = weyl_symbol(frame, a, b);
        f *= uniform(rng, opt.norm_lo, opt.norm_hi) / norm(frame.basis, f);
        s.terms.push_back({complex_gaussian(rng), f});
    }
    return normalized(frame.basis, s);
}

namespace {

// Translated symbols of every slot term, their Gram matrix and window coordinates.
struct Expanded {
    std::vector<int> first;  // index of slot i's first term
    std::vector<Vec> g;
    Mat gram;
    std::vector<Vec> cw;
};

Expanded expand(const EnergyWindow& w, const std::vector<Slot>& slots, const std::vector<double>& xs) {
    if (slots.size() != xs.size()) throw SizeError("one site per slot");
    Expanded ex;
    for (std::size_t i = 0; i < slots.size(); ++i) {
        ex.first.push_back(static_cast<int>(ex.g.size()));
        for (const auto& t : slots[i].terms) ex.g.push_back(translate(w.basis, t.f, 0.0, xs[i]));
    }
    ex.first.push_back(static_cast<int>(ex.g.size()));
    const int n = static_cast<int>(ex.g.size());
    Mat G(w.basis.n_modes, n);
    for (int k = 0; k < n; ++k) G.col(k) = ex.g[k];
    ex.gram = w.basis.dp * (G.adjoint() * G);
    for (const auto& v : ex.g) ex.cw.push_back(coords(w.modes, v));
    return ex;
}

// P_E W(g_{p_1}) ... W(g_{p_k}) P_E for the listed term indices, in order.
Mat weyl_product(const EnergyWindow& w, const Expanded& ex, const std::vector<int>& idx) {
    if (idx.empty()) return Mat::Identity(w.dim(), w.dim());
    double im = 0.0, n2 = 0.0;
    Vec c = Vec::Zero(w.fb.n_modes);
    for (std::size_t p = 0; p < idx.size(); ++p) {
        c += ex.cw[idx[p]];
        for (std::size_t q = 0; q < idx.size(); ++q) {
            n2 += ex.gram(idx[p], idx[q]).real();
            if (p < q) im += ex.gram(idx[p], idx[q]).imag();
        }
    }
    return std::exp(cd(-0.5 * n2, -im)) * window_normal_weyl_coords(w, c);
}

}  // namespace

Mat form_matrix(const EnergyWindow& w, const std::vector<Slot>& slots, const std::vector<double>& xs) {
    const Expanded ex = expand(w, slots, xs);
    const int N = static_cast<int>(slots.size());
    // slot i contributes sum_k c_k W(g_k) + d_i I
    std::vector<cd> d(N, 0.0);
    for (int i = 0; i < N; ++i)
        for (const auto& t : slots[i].terms) d[i] -= t.coeff * std::exp(-0.5 * std::pow(norm(w.basis, t.f), 2));

    Mat out = Mat::Zero(w.dim(), w.dim());
    std::vector<int> choice(N, 0);
    std::vector<int> idx;
    while (true) {
        cd coef = 1.0;
        idx.clear();
        for (int i = 0; i < N; ++i) {
            const int nt = ex.first[i + 1] - ex.first[i];
            if (choice[i] < nt) {
                coef *= slots[i].terms[choice[i]].coeff;
                idx.push_back(ex.first[i] + choice[i]);
            } else {
                coef *= d[i];
            }
        }
        if (coef != cd(0.0)) out += coef * weyl_product(w, ex, idx);
        int i = N - 1;
        for (; i >= 0; --i) {
            if (++choice[i] <= ex.first[i + 1] - ex.first[i]) break;
            choice[i] = 0;
        }
        if (i < 0) break;
    }
    return out;
}

cd evaluate_form(const EnergyWindow& w, const EnergyFunctional& phi, const std::vector<Slot>& slots,
                 const std::vector<double>& xs) {
    const Mat m = form_matrix(w, slots, xs);
    if (m.rows() != phi.dim()) throw SizeError("functional and window dimensions differ");
    return phi(m);
}

namespace {

Measured form_bruteforce_once(const EnergyWindow& w, const EnergyFunctional& phi, const std::vector<Slot>& slots,
                              const std::vector<double>& xs, int n_max) {
    cd total = 0.0;
    for (std::size_t v = 0; v < phi.vectors.size(); ++v) {
        const Vec& psi = phi.vectors[v];
        Vec u = Vec::Zero(w.basis.n_modes);
        for (int s = 0; s < w.dim(); ++s) {
            if (w.fb.number(s) != 1) continue;
            for (int k = 0; k < w.fb.n_modes; ++k)
                if (w.fb.occupation(s, k) == 1) u += psi(s) * w.modes.vectors.col(k);
        }
        std::vector<Vec> span{u};
        for (std::size_t i = 0; i < slots.size(); ++i)
            for (const auto& t : slots[i].terms) span.push_back(translate(w.basis, t.f, 0.0, xs[i]));
        const ModeSet ms = span_modes(w.basis, span);
        const FockBasis fb = build_fock(ms, n_max);
        Vec vac = Vec::Zero(fb.dim);
        vac(0) = 1.0;
        Vec state = psi(0) * vac;
        if (norm(w.basis, u) > 0.0) state += creator(fb, coords(ms, u)) * vac;
        Vec out = state;
        for (int i = static_cast<int>(slots.size()) - 1; i >= 0; --i) {
            Vec next = Vec::Zero(fb.dim);
            for (const auto& t : slots[i].terms) {
                const Vec c = coords(ms, translate(w.basis, t.f, 0.0, xs[i]));
                const double w0 = std::exp(-0.5 * std::pow(norm(w.basis, t.f), 2));
                next += t.coeff * (weyl_apply(fb, c, out) - w0 * out);
            }
            out = next;
        }
        total += phi.weights(static_cast<Eigen::Index>(v)) * state.dot(out);
    }
    return {total, 0.0};
}

}  // namespace

Measured evaluate_form_bruteforce(const EnergyWindow& w, const EnergyFunctional& phi, const std::vector<Slot>& slots,
                                  const std::vector<double>& xs, int n_max) {
    if (w.degree > 1) throw PreconditionError("brute-force form needs E < 2m");
    const Measured a = form_bruteforce_once(w, phi, slots, xs, n_max);
    const Measured b = form_bruteforce_once(w, phi, slots, xs, n_max + 4);
    return {b.value, std::abs(a.value - b.value)};
}

namespace {

struct Translated {
    std::vector<Vec> g;
    std::vector<Vec> cw;
    Mat gram;
    RVec norm2;
};

Translated translated(const EnergyWindow& w, const std::vector<Vec>& fs, const std::vector<double>& xs) {
    if (fs.size() != xs.size()) throw SizeError("one site per symbol");
    Translated tr;
    const int n = static_cast<int>(fs.size());
    Mat G(w.basis.n_modes, n);
    for (int i = 0; i < n; ++i) {
        tr.g.push_back(translate(w.basis, fs[i], 0.0, xs[i]));
        tr.cw.push_back(coords(w.modes, tr.g.back()));
        G.col(i) = tr.g.back();
    }
    tr.gram = w.basis.dp * (G.adjoint() * G);
    tr.norm2 = tr.gram.diagonal().real();
    return tr;
}

Vec mask_coords(const EnergyWindow& w, const Translated& tr, unsigned mask) {
    Vec c = Vec::Zero(w.fb.n_modes);
    for (std::size_t i = 0; i < tr.cw.size(); ++i)
        if (mask & (1u << i)) c += tr.cw[i];
    return c;
}

double mask_re_overlap(const Translated& tr, unsigned mask) {
    double s = 0.0;
    const int n = static_cast<int>(tr.g.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((mask & (1u << i)) && (mask & (1u << j))) s += tr.gram(i, j).real();
    return s;
}

void check_sites(std::size_t n) {
    if (n > 20) throw SizeError("too many sites for a partition sum");
}

}  // namespace

cd crucial_expansion(const EnergyWindow& w, const EnergyFunctional& phi, const std::vector<Vec>& fs,
                     const std::vector<double>& xs) {
    check_sites(fs.size());
    const Translated tr = translated(w, fs, xs);
    const int N = static_cast<int>(fs.size());
    const double pre = std::exp(-0.5 * tr.norm2.sum());
    cd s = 0.0;
    for (unsigned mask = 0; mask < (1u << N); ++mask) {
        const double sign = ((N - popcount(mask)) % 2) ? -1.0 : 1.0;
        s += sign * pre * std::exp(-mask_re_overlap(tr, mask)) * phi(window_normal_weyl_coords(w, mask_coords(w, tr, mask)));
    }
    return s;
}

cd pi_prime(const EnergyWindow& w, const EnergyFunctional& phi, const std::vector<Vec>& fs,
            const std::vector<double>& xs) {
    check_sites(fs.size());
    const Translated tr = translated(w, fs, xs);
    const unsigned all = (1u << fs.size()) - 1u;
    return std::exp(-0.5 * tr.norm2.sum()) * std::expm1(-mask_re_overlap(tr, all)) *
           phi(window_normal_weyl_coords(w, mask_coords(w, tr, all)));
}

cd pi_prime_expansion(const EnergyWindow& w, const EnergyFunctional& phi, const std::vector<Vec>& fs,
                      const std::vector<double>& xs) {
    check_sites(fs.size());
    const int N = static_cast<int>(fs.size());
    cd s = 0.0;
    for (unsigned mask = 0; mask < (1u << N); ++mask) {
        std::vector<Vec> f1;
        std::vector<double> x1;
        double w0 = 1.0;
        for (int i = 0; i < N; ++i) {
            if (mask & (1u << i)) {
                f1.push_back(fs[i]);
                x1.push_back(xs[i]);
            } else {
                w0 *= -std::exp(-0.5 * std::pow(norm(w.basis, fs[i]), 2));
            }
        }
        if (f1.size() < 2) continue;  // no pairs: the prime term vanishes
        s += w0 * pi_prime(w, phi, f1, x1);
    }
    return s;
}

Mat s_product_window(const EnergyWindow& w, const std::vector<Vec>& fs, const std::vector<double>& xs) {
    const Translated tr = translated(w, fs, xs);
    Mat c = Mat::Identity(w.dim(), w.dim());
    for (int i = static_cast<int>(fs.size()) - 1; i >= 0; --i) {
        const Mat left = window_exp_annihilator_coords(w, -tr.cw[i]).adjoint();
        const Mat right = window_exp_annihilator_coords(w, tr.cw[i]);
        c = left * c * right - c;
    }
    return c;
}

Mat s_product_fock(const EnergyWindow& w, const std::vector<Vec>& fs, const std::vector<double>& xs, int n_max) {
    const Translated tr = translated(w, fs, xs);
    const ModeSet ms = augmented_modes(w.basis, w.E, tr.g);
    const FockBasis fb = build_fock(ms, n_max);
    const SpMat p = energy_projection(fb, w.E);
    SpMat c(fb.dim, fb.dim);
    c.setIdentity();
    for (int i = static_cast<int>(fs.size()) - 1; i >= 0; --i) {
        const MMap m(fb, ms, w.E, w.basis.m, tr.g[i]);
        c = m(c) - SpMat(p * c * p);
    }
    // window state s has the same occupations on the first modes
    std::vector<int> map(w.dim());
    for (int s = 0; s < w.dim(); ++s) {
        std::vector<std::uint8_t> occ(fb.n_modes, 0);
        for (int k = 0; k < w.fb.n_modes; ++k) occ[k] = static_cast<std::uint8_t>(w.fb.occupation(s, k));
        map[s] = fb.index_of(occ);
    }
    std::vector<int> inv(fb.dim, -1);
    for (int s = 0; s < w.dim(); ++s) inv[map[s]] = s;
    Mat out = Mat::Zero(w.dim(), w.dim());
    for (int k = 0; k < c.outerSize(); ++k)
        for (SpMat::InnerIterator it(c, k); it; ++it)
            if (inv[it.row()] >= 0 && inv[it.col()] >= 0) out(inv[it.row()], inv[it.col()]) = it.value();
    return out;
}

SVanishing s_vanishing_check(const EnergyWindow& w, const std::vector<Vec>& fs, const std::vector<double>& xs,
                             const std::vector<EnergyFunctional>& phis) {
    const int N = static_cast<int>(fs.size());
    if (!(N > 2.0 * w.E / w.basis.m))
        throw PreconditionError("S vanishes only for N > 2E/m");
    check_sites(fs.size());
    const Translated tr = translated(w, fs, xs);
    SVanishing out;
    out.functionals = static_cast<int>(phis.size());

    Mat alt = Mat::Zero(w.dim(), w.dim());
    for (unsigned mask = 0; mask < (1u << N); ++mask) {
        const Mat nw = window_normal_weyl_coords(w, mask_coords(w, tr, mask));
        out.scale = std::max(out.scale, op_norm(nw));
        if ((N - popcount(mask)) % 2) alt -= nw;
        else alt += nw;
    }
    Mat prod = Mat::Identity(w.dim(), w.dim());
    for (int i = N - 1; i >= 0; --i) {
        const Mat left = window_exp_annihilator_coords(w, -tr.cw[i]).adjoint();
        const Mat right = window_exp_annihilator_coords(w, tr.cw[i]);
        const Mat mc = left * prod * right;
        out.scale = std::max(out.scale, op_norm(mc));
        prod = mc - prod;
        out.scale = std::max(out.scale, op_norm(prod));
    }
    for (const auto& phi : phis) {
        const cd a = phi(alt);
        const cd b = phi(prod);
        out.residual = std::max({out.residual, std::abs(a), std::abs(b)});
        out.route_diff = std::max(out.route_diff, std::abs(a - b));
    }
    return out;
}

PiNormSample sample_pinorm_family(const LocalizationFrame& frame, int N, std::uint64_t seed, int k) {
    Rng rng = make_rng(seed, kTagPinorm, static_cast<std::uint64_t>(k));
    PiNormSample s;
    for (int i = 0; i < N; ++i) s.slots.push_back(sample_slot(frame, rng));
    for (int i = 0; i + 1 < N; ++i) s.jitter.push_back(uniform(rng, 0.0, 0.5));
    return s;
}

std::vector<double> pinorm_sites(const PiNormSample& s, double delta, double r) {
    std::vector<double> xs{0.0};
    for (double j : s.jitter) xs.push_back(xs.back() + 2.0 * r + delta + j);
    return xs;
}

namespace {

// Sites must not wrap around the periodic box: span < half the period.
void check_span(const ModeBasis& basis, const std::vector<double>& xs) {
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    if (*hi - *lo >= 0.5 * period(basis)) throw GeometryError("sites span more than half the periodic box");
}

}  // namespace

PiNormEntry pi_norm_estimate(const EnergyWindow& w, const LocalizationFrame& frame, int N, double delta,
                             int samples, std::uint64_t seed) {
    if (N < 1) throw ConfigError("N must be at least 1");
    PiNormEntry e;
    e.delta = delta;
    e.values.assign(samples, 0.0);
    std::vector<Mat> mats(samples);
    parallel_for(samples, [&](int k) {
        const PiNormSample s = sample_pinorm_family(frame, N, seed, k);
        const auto xs = pinorm_sites(s, delta, frame.r);
        check_span(w.basis, xs);
        mats[k] = form_matrix(w, s.slots, xs);
        e.values[k] = op_norm(mats[k]);
    });
    for (int k = 0; k < samples; ++k) {
        if (e.values[k] > e.best || e.best_index < 0) {
            e.best = e.values[k];
            e.best_index = k;
        }
    }
    if (e.best_index >= 0) {
        for (int j = 0; j < 16; ++j) {
            const auto phi = sample_energy_functional(w.dim(), w.E, seed ^ kTagPhi, static_cast<std::uint64_t>(j));
            e.best_phi = std::max(e.best_phi, std::abs(phi(mats[e.best_index])));
        }
    }
    return e;
}

namespace {

// Branch and bound over candidate bitmasks.
void grow_packing(const std::vector<std::uint64_t>& far, std::uint64_t cand, int size, int& best) {
    if (cand == 0) {
        best = std::max(best, size);
        return;
    }
    if (size + std::popcount(cand) <= best) return;
    const int v = std::countr_zero(cand);
    const std::uint64_t bit = std::uint64_t{1} << v;
    grow_packing(far, cand & far[static_cast<std::size_t>(v)], size + 1, best);
    grow_packing(far, cand & ~bit, size, best);
}

}  // namespace

int epsilon_content(int n_points, const std::function<double(int, int)>& dist, double eps) {
    if (n_points > 64) throw SizeError("epsilon_content: more than 64 points");
    if (n_points <= 0) return 0;
    std::vector<std::uint64_t> far(static_cast<std::size_t>(n_points), 0);
    for (int i = 0; i < n_points; ++i)
        for (int j = i + 1; j < n_points; ++j)
            if (dist(i, j) > eps) {
                far[static_cast<std::size_t>(i)] |= std::uint64_t{1} << j;
                far[static_cast<std::size_t>(j)] |= std::uint64_t{1} << i;
            }
    const std::uint64_t all = n_points == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n_points) - 1;
    int best = 0;
    grow_packing(far, all, 0, best);
    return best;
}

int epsilon_content(const Mat& points, double eps) {
    return epsilon_content(
        static_cast<int>(points.rows()),
        [&](int i, int j) { return (points.row(i) - points.row(j)).cwiseAbs().maxCoeff(); }, eps);
}

double diameter(const Mat& points) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i)
        for (Eigen::Index j = i + 1; j < points.rows(); ++j)
            d = std::max(d, (points.row(i) - points.row(j)).cwiseAbs().maxCoeff());
    return d;
}

Mat form_image(const EnergyWindow& w, const LocalizationFrame& frame, int N, double delta, int n_points,
               int n_slot_sets, std::uint64_t seed) {
    std::vector<std::vector<Slot>> sets;
    for (int j = 0; j < n_slot_sets; ++j) sets.push_back(sample_pinorm_family(frame, N, seed, j).slots);
    Mat out(n_points, n_slot_sets);
    parallel_for(n_points, [&](int p) {
        Rng rng = make_rng(seed, kTagImage, static_cast<std::uint64_t>(p));
        PiNormSample geo;
        for (int i = 0; i + 1 < N; ++i) geo.jitter.push_back(uniform(rng, 0.0, 0.5));
        const auto xs = pinorm_sites(geo, delta, frame.r);
        check_span(w.basis, xs);
        const auto phi = sample_energy_functional(w.dim(), w.E, seed ^ kTagImage, static_cast<std::uint64_t>(p));
        for (int j = 0; j < n_slot_sets; ++j) out(p, j) = phi(form_matrix(w, sets[j], xs));
    });
    return out;
}

AveragingEntry averaging_experiment(const EnergyWindow& w, const Slot& A, int n, double delta, double r, int N,
                                    int samples, std::uint64_t seed) {
    if (N < 1 || (N & (N - 1)) != 0) throw ConfigError("N must be a power of two");
    if (n < N) throw ConfigError("need n >= N");
    const AdmissibleConfig cfg = equally_spaced(n, delta, r);
    if (n * (2.0 * r + delta) > period(w.basis)) throw GeometryError("sites wrap around the periodic box");

    AveragingEntry e;
    e.n = n;
    e.delta = delta;
    e.samples = samples;
    Mat Q = Mat::Zero(w.dim(), w.dim());
    std::vector<Mat> single(n);
    for (int i = 0; i < n; ++i) {
        single[i] = form_matrix(w, {A}, {cfg.xs[i]});
        Q += single[i] / static_cast<double>(n);
    }
    e.exact_sup = op_norm(Q);
    for (int j = 0; j < samples; ++j) {
        const auto phi = sample_energy_functional(w.dim(), w.E, seed ^ kTagPhi, static_cast<std::uint64_t>(j));
        e.measured = std::max(e.measured, std::abs(phi(Q)));
    }

    // distinct ordered N-tuples
    double tuples = 1.0;
    for (int k = 0; k < N; ++k) tuples *= (n - k);
    if (tuples > 2e5) throw SizeError("too many site tuples");
    std::vector<int> idx(N, 0);
    std::vector<std::vector<int>> all;
    std::function<void(int, unsigned long long)> rec = [&](int d, unsigned long long used) {
        if (d == N) {
            all.push_back(idx);
            return;
        }
        for (int i = 0; i < n; ++i) {
            if (used & (1ull << i)) continue;
            idx[d] = i;
            rec(d + 1, used | (1ull << i));
        }
    };
    if (n > 60) throw SizeError("too many sites");
    rec(0, 0ull);
    std::vector<double> vals(all.size());
    parallel_for(static_cast<int>(all.size()), [&](int t) {
        std::vector<Slot> slots(N, A);
        std::vector<double> xs;
        for (int i : all[t]) xs.push_back(cfg.xs[i]);
        vals[t] = op_norm(form_matrix(w, slots, xs));
    });
    for (double v : vals) e.sup_term = std::max(e.sup_term, v);

    const double falling = tuples;  // binom(n, N) N!
    const double frac = (std::pow(static_cast<double>(n), N) - falling) / std::pow(static_cast<double>(n), N);
    e.remainder = frac * std::pow(slot_norm_bound(w.basis, A), N);
    e.bound = std::pow(e.sup_term + e.remainder, 1.0 / N);
    return e;
}

cd clustering_closed_form(const ModeBasis& basis, const Vec& f, const Vec& g, double lambda) {
    const Vec gl = translate(basis, g, 0.0, lambda);
    const double nf = std::pow(norm(basis, f), 2);
    const double ng = std::pow(norm(basis, g), 2);
    return std::exp(-0.5 * (nf + ng)) * (std::exp(-inner(basis, f, gl)) - 1.0);
}

namespace {

cd clustering_trace_once(const ModeBasis& basis, const Vec& f, const Vec& gl, int n_max) {
    const ModeSet ms = span_modes(basis, {f, gl});
    const FockBasis fb = build_fock(ms, n_max);
    Vec vac = Vec::Zero(fb.dim);
    vac(0) = 1.0;
    const double wf = std::exp(-0.5 * std::pow(norm(basis, f), 2));
    const double wg = std::exp(-0.5 * std::pow(norm(basis, gl), 2));
    const Vec v = weyl_apply(fb, coords(ms, gl), vac) - wg * vac;
    const Vec u = weyl_apply(fb, coords(ms, f), v) - wf * v;
    return u(0);
}

}  // namespace

Measured clustering_trace(const ModeBasis& basis, const Vec& f, const Vec& g, double lambda, int n_max) {
    const Vec gl = translate(basis, g, 0.0, lambda);
    const cd a = clustering_trace_once(basis, f, gl, n_max);
    const cd b = clustering_trace_once(basis, f, gl, n_max + 4);
    return {b, std::abs(a - b)};
}

std::vector<ClusteringRow> clustering_experiment(const ModeBasis& basis, const Vec& f, const Vec& g,
                                                 const std::vector<double>& lambdas, int n_max) {
    std::vector<ClusteringRow> rows(lambdas.size());
    parallel_for(static_cast<int>(lambdas.size()), [&](int i) {
        rows[i].lambda = lambdas[i];
        rows[i].closed = clustering_closed_form(basis, f, g, lambdas[i]);
        rows[i].trace = clustering_trace(basis, f, g, lambdas[i], n_max);
    });
    return rows;
}

double ppp_average(const std::function<double(double, double)>& F, double L, double eps_exponent, int points) {
    if (!(eps_exponent > 0.0 && eps_exponent < 1.0)) throw ConfigError("eps exponent must lie in (0, 1)");
    if (points < 2) throw ConfigError("need at least two quadrature points per axis");
    if (static_cast<long>(points) * points > kPppBudget) throw SizeError("quadrature budget exceeded");
    const double T = std::pow(L, eps_exponent);
    auto w = [points](int i) { return (i == 0 || i == points - 1) ? 0.5 : 1.0; };
    double s = 0.0, norm_w = 0.0;
    for (int i = 0; i < points; ++i) {
        const double t = -T + 2.0 * T * i / (points - 1);
        for (int j = 0; j < points; ++j) {
            const double x = -L + 2.0 * L * j / (points - 1);
            s += w(i) * w(j) * F(t, x);
            norm_w += w(i) * w(j);
        }
    }
    return s / norm_w;
}

double one_particle_expectation(const ModeBasis& basis, const Vec& f, const Vec& h, double t, double x) {
    const Vec fx = translate(basis, f, t, x);
    return -std::exp(-0.5 * std::pow(norm(basis, f), 2)) * std::norm(inner(basis, fx, h));
}

namespace {

double one_particle_fock_once(const ModeBasis& basis, const Vec& fx, const Vec& h, int n_max) {
    const ModeSet ms = span_modes(basis, {h, fx});
    const FockBasis fb = build_fock(ms, n_max);
    Vec vac = Vec::Zero(fb.dim);
    vac(0) = 1.0;
    const Vec psi = creator(fb, coords(ms, h)) * vac;
    const double w0 = std::exp(-0.5 * std::pow(norm(basis, fx), 2));
    const Vec out = weyl_apply(fb, coords(ms, fx), psi) - w0 * psi;
    return psi.dot(out).real();
}

}  // namespace

Measured one_particle_expectation_fock(const ModeBasis& basis, const Vec& f, const Vec& h, double t, double x,
                                      int n_max) {
    const Vec fx = translate(basis, f, t, x);
    const double a = one_particle_fock_once(basis, fx, h, n_max);
    const double b = one_particle_fock_once(basis, fx, h, n_max + 4);
    return {cd(b, 0.0), std::abs(a - b)};
}

std::vector<PppRow> ppp_averaging(const ModeBasis& basis, const Vec& f, const Vec& h, const std::vector<double>& Ls,
                                  double eps_exponent, int points) {
    if (std::abs(norm(basis, h) - 1.0) > 1e-12) throw ConfigError("one-particle vector must be normalized");
    std::vector<PppRow> rows(Ls.size());
    for (std::size_t i = 0; i < Ls.size(); ++i) {
        if (2.0 * Ls[i] >= period(basis)) throw GeometryError("box wider than the periodic grid");
        rows[i].L = Ls[i];
        rows[i].average = ppp_average(
            [&](double t, double x) { return one_particle_expectation(basis, f, h, t, x); }, Ls[i], eps_exponent,
            points);
        rows[i].deviation = std::abs(rows[i].average);
    }
    return rows;
}

std::vector<SharpRow> sharp_momentum_experiment(const ModeBasis& basis, double p0, double p1,
                                                const std::vector<double>& radii, const Vec& f) {
    if (radii.empty()) return {};
    const double rmax = *std::max_element(radii.begin(), radii.end());
    const EnergyWindow w = build_energy_window(basis, p0 + rmax);
    const double w0 = std::exp(-0.5 * std::pow(norm(basis, f), 2));
    const Mat Y = window_weyl(w, f) - w0 * Mat::Identity(w.dim(), w.dim());
    RVec mom = RVec::Zero(w.dim());
    for (int s = 0; s < w.dim(); ++s) {
        for (int k = 0; k < w.fb.n_modes; ++k)
            mom(s) += w.fb.occupation(s, k) * basis.p(w.modes.grid_index[static_cast<std::size_t>(k)]);
    }
    std::vector<SharpRow> rows;
    for (double r : radii) {
        std::vector<int> in;
        for (int s = 0; s < w.dim(); ++s) {
            const double de = w.fb.energy(s) - p0, dq = mom(s) - p1;
            if (de * de + dq * dq <= r * r) in.push_back(s);
        }
        SharpRow row;
        row.radius = r;
        row.dim = static_cast<int>(in.size());
        row.vacuum_only = in.size() == 1 && in[0] == 0;
        if (!in.empty()) {
            Mat q(in.size(), in.size());
            for (std::size_t a = 0; a < in.size(); ++a)
                for (std::size_t b = 0; b < in.size(); ++b) q(a, b) = Y(in[a], in[b]);
            row.sup = op_norm(q);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace pslab
