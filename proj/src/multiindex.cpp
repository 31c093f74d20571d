#include "pslab/multiindex.hpp"

#include <bit>
#include <cmath>
#include <map>

namespace pslab {

int order(const MultiIndex& mu) {
    int s = 0;
    for (int v : mu) s += v;
    return s;
}

double mfactorial(const MultiIndex& mu) {
    double r = 1.0;
    for (int v : mu) r *= factorial(v);
    return r;
}

MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
    if (a.size() != b.size()) throw SizeError("multiindex length mismatch");
    MultiIndex c(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) c[k] = a[k] + b[k];
    return c;
}

bool is_zero(const MultiIndex& mu) {
    return std::all_of(mu.begin(), mu.end(), [](int v) { return v == 0; });
}

namespace {

void fill_order(int K, int pos, int left, MultiIndex& cur, std::vector<MultiIndex>& out) {
    if (pos == K - 1) {
        cur[static_cast<std::size_t>(pos)] = left;
        out.push_back(cur);
        return;
    }
    for (int v = left; v >= 0; --v) {
        cur[static_cast<std::size_t>(pos)] = v;
        fill_order(K, pos + 1, left - v, cur, out);
    }
}

}  // namespace

std::vector<MultiIndex> multiindices_of_order(int K, int k) {
    if (K < 0 || k < 0) throw ConfigError("multiindex sizes must be non-negative");
    std::vector<MultiIndex> out;
    if (K == 0) {
        if (k == 0) out.emplace_back();
        return out;
    }
    MultiIndex cur(static_cast<std::size_t>(K), 0);
    fill_order(K, 0, k, cur, out);
    return out;
}

std::vector<MultiIndex> multiindices_up_to(int K, int kmax) {
    std::vector<MultiIndex> out;
    for (int k = 0; k <= kmax; ++k) {
        auto part = multiindices_of_order(K, k);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

int MultiIndexBundle::order() const { return order_plus() + order_minus(); }

int MultiIndexBundle::order_plus() const {
    int s = 0;
    for (const auto& m : plus) s += pslab::order(m);
    return s;
}

int MultiIndexBundle::order_minus() const {
    int s = 0;
    for (const auto& m : minus) s += pslab::order(m);
    return s;
}

double MultiIndexBundle::factorial() const {
    double r = 1.0;
    for (const auto& m : plus) r *= mfactorial(m);
    for (const auto& m : minus) r *= mfactorial(m);
    return r;
}

MultiIndexBundle zero_bundle(int M, int K) {
    MultiIndexBundle b;
    b.plus.assign(static_cast<std::size_t>(M), MultiIndex(static_cast<std::size_t>(K), 0));
    b.minus = b.plus;
    return b;
}

MultiIndexBundle operator+(const MultiIndexBundle& a, const MultiIndexBundle& b) {
    if (a.slots() != b.slots()) throw SizeError("bundle slot mismatch");
    MultiIndexBundle c;
    for (int i = 0; i < a.slots(); ++i) {
        c.plus.push_back(a.plus[i] + b.plus[i]);
        c.minus.push_back(a.minus[i] + b.minus[i]);
    }
    return c;
}

int PairBundle::order() const { return order_plus() + order_minus(); }

int PairBundle::order_plus() const {
    int s = 0;
    for (const auto& m : plus) s += pslab::order(m);
    return s;
}

int PairBundle::order_minus() const {
    int s = 0;
    for (const auto& m : minus) s += pslab::order(m);
    return s;
}

double PairBundle::factorial() const {
    double r = 1.0;
    for (const auto& m : plus) r *= mfactorial(m);
    for (const auto& m : minus) r *= mfactorial(m);
    return r;
}

int pair_index(int M, int i, int j) {
    if (!(0 <= i && i < j && j < M)) throw ConfigError("pair_index needs 0 <= i < j < M");
    return i * M - i * (i + 1) / 2 + (j - i - 1);
}

PairBundle zero_pairs(int M, int K) {
    PairBundle p;
    p.M = M;
    const int n = M * (M - 1) / 2;
    p.plus.assign(static_cast<std::size_t>(n), MultiIndex(static_cast<std::size_t>(K), 0));
    p.minus = p.plus;
    return p;
}

Arrows arrows(const PairBundle& a) {
    const int M = a.M;
    const int K = a.pairs() > 0 ? static_cast<int>(a.plus.front().size()) : 0;
    Arrows r{zero_bundle(M, K), zero_bundle(M, K)};
    for (int i = 0; i < M; ++i) {
        for (int j = i + 1; j < M; ++j) {
            const int p = pair_index(M, i, j);
            r.right.plus[i] = r.right.plus[i] + a.plus[p];
            r.right.minus[i] = r.right.minus[i] + a.minus[p];
            r.left.plus[j] = r.left.plus[j] + a.plus[p];
            r.left.minus[j] = r.left.minus[j] + a.minus[p];
        }
    }
    return r;
}

namespace {

void combos(int n, int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == k) {
        out.push_back(cur);
        return;
    }
    for (int v = start; v <= n - (k - static_cast<int>(cur.size())); ++v) {
        cur.push_back(v);
        combos(n, k, v + 1, cur, out);
        cur.pop_back();
    }
}

}  // namespace

std::vector<Partition> ordered_partitions(int N, int cap) {
    if (N < 0) throw ConfigError("ordered_partitions needs N >= 0");
    if (N > cap) throw SizeError("ordered_partitions: N = " + std::to_string(N) + " above cap " + std::to_string(cap));
    std::vector<Partition> out;
    out.reserve(std::size_t{1} << N);
    for (int s2 = 0; s2 <= N; ++s2) {
        std::vector<std::vector<int>> r1s;
        std::vector<int> cur;
        combos(N, N - s2, 0, cur, r1s);
        for (const auto& r1 : r1s) {
            Partition p;
            p.r1 = r1;
            std::size_t q = 0;
            for (int v = 0; v < N; ++v) {
                if (q < r1.size() && r1[q] == v)
                    ++q;
                else
                    p.r2.push_back(v);
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

SymbolCoords symbol_coords(const ModeBasis& basis, const TSpectrum& spec, const Vec& f) {
    const Vec fp = j_plus(f);
    const Vec fm = j_minus(f);
    const Eigen::Index K = spec.e.cols();
    SymbolCoords c{RVec(K), RVec(K)};
    for (Eigen::Index k = 0; k < K; ++k) {
        c.plus(k) = inner(basis, spec.e.col(k), fp).real();
        c.minus(k) = inner(basis, spec.e.col(k), fm).real();
    }
    return c;
}

cd tau_formula(const ModeBasis& basis, const TSpectrum& spec, const MultiIndex& mp, const MultiIndex& mm,
               const Vec& f) {
    const SymbolCoords c = symbol_coords(basis, spec, f);
    const double n = norm(basis, f);
    return std::exp(-0.5 * n * n) * mpow(c.plus, mp) * mpow(c.minus, mm);
}

namespace {

struct TauTerm {
    cd coef;
    MultiIndex left;   // alpha+ + alpha-   (annihilators next to the bra)
    MultiIndex mid;    // alpha'+ + alpha'- (creators next to the bra)
    MultiIndex right;  // alpha''+ + alpha''- (creators on the ket)
};

// Splits of mu into (a, a', a'') with multinomial weight and the sign count |a'| or |a''|.
struct Split {
    MultiIndex a, a1, a2;
    double weight;
};

std::vector<Split> splits(const MultiIndex& mu) {
    std::vector<Split> out{{MultiIndex(mu.size(), 0), MultiIndex(mu.size(), 0), MultiIndex(mu.size(), 0), 1.0}};
    for (std::size_t k = 0; k < mu.size(); ++k) {
        std::vector<Split> next;
        for (const Split& s : out) {
            for (int x = 0; x <= mu[k]; ++x) {
                for (int y = 0; x + y <= mu[k]; ++y) {
                    Split t = s;
                    t.a[k] = x;
                    t.a1[k] = y;
                    t.a2[k] = mu[k] - x - y;
                    t.weight *= factorial(mu[k]) / (factorial(x) * factorial(y) * factorial(mu[k] - x - y));
                    next.push_back(std::move(t));
                }
            }
        }
        out = std::move(next);
    }
    return out;
}

std::vector<TauTerm> tau_terms(const MultiIndex& mp, const MultiIndex& mm) {
    const int np = order(mp), nm = order(mm);
    // (1/2)^{|mu|} i^{-|mu+| - 2|mu-|}
    const cd pre = std::pow(0.5, np + nm) * std::pow(I_, -np - 2 * nm);
    std::vector<TauTerm> out;
    const auto sp = splits(mp);
    const auto sm = splits(mm);
    for (const Split& p : sp) {
        for (const Split& m : sm) {
            const int sgn = order(p.a1) + order(m.a2);
            out.push_back({pre * ((sgn % 2) ? -1.0 : 1.0) * p.weight * m.weight, p.a + m.a, p.a1 + m.a1, p.a2 + m.a2});
        }
    }
    return out;
}

std::vector<int> used_modes(const MultiIndex& mp, const MultiIndex& mm) {
    std::vector<int> u;
    for (std::size_t k = 0; k < mp.size(); ++k)
        if (mp[k] + mm[k] > 0) u.push_back(static_cast<int>(k));
    return u;
}

MultiIndex restrict(const MultiIndex& mu, const std::vector<int>& used) {
    MultiIndex r;
    for (int k : used) r.push_back(mu[static_cast<std::size_t>(k)]);
    return r;
}

Vec apply_powers(const std::vector<SpMat>& ops, const MultiIndex& mu, Vec v) {
    for (std::size_t k = 0; k < mu.size(); ++k)
        for (int n = 0; n < mu[k]; ++n) v = ops[k] * v;
    return v;
}

void check_tau_cap(const MultiIndex& mp, const MultiIndex& mm) {
    if (mp.size() != mm.size()) throw SizeError("tau: mu+ and mu- lengths differ");
    if (order(mp) + order(mm) > kTauCap)
        throw SizeError("tau: |mu| above the brute-force cap " + std::to_string(kTauCap));
}

cd tau_brute_at(const ModeBasis& basis, const TSpectrum& spec, const std::vector<TauTerm>& terms,
                const std::vector<int>& used, const Vec& f, int n_max) {
    std::vector<Vec> fs;
    for (int k : used) fs.push_back(spec.e.col(k));
    fs.push_back(f);
    const ModeSet ms = span_modes(basis, fs);
    const FockBasis fb = build_fock(ms, n_max);
    std::vector<SpMat> cre, ann;
    for (int k : used) {
        const Vec c = coords(ms, spec.e.col(k));
        ann.push_back(annihilator(fb, c));
        cre.push_back(creator(fb, c));
    }
    const Vec cf = coords(ms, f);
    Vec vac = Vec::Zero(fb.dim);
    vac(0) = 1.0;
    std::map<MultiIndex, Vec> wy;
    cd acc = 0.0;
    for (const TauTerm& t : terms) {
        const MultiIndex l = restrict(t.left, used), m = restrict(t.mid, used), r = restrict(t.right, used);
        auto it = wy.find(r);
        if (it == wy.end()) it = wy.emplace(r, weyl_apply(fb, cf, apply_powers(cre, r, vac))).first;
        // (Omega| a^l a*^m W a*^r Omega) = < a^m a*^l Omega | W a*^r Omega >
        const Vec x = apply_powers(ann, m, apply_powers(cre, l, vac));
        acc += t.coef * x.dot(it->second);
    }
    return acc;
}

FockBasis abstract_fock(int modes, int n_max) {
    ModeSet ms;
    ms.vectors = Mat::Identity(modes, modes);
    ms.energy = RVec::Constant(modes, std::numeric_limits<double>::infinity());
    ms.dp = 1.0;
    return build_fock(ms, n_max);
}

}  // namespace

Measured tau_bruteforce(const ModeBasis& basis, const TSpectrum& spec, const MultiIndex& mp, const MultiIndex& mm,
                        const Vec& f, int n_max) {
    check_tau_cap(mp, mm);
    const auto terms = tau_terms(mp, mm);
    const auto used = used_modes(mp, mm);
    Measured out;
    out.value = tau_brute_at(basis, spec, terms, used, f, n_max);
    out.eta = std::abs(tau_brute_at(basis, spec, terms, used, f, n_max + 4) - out.value);
    return out;
}

double tau_norm(const MultiIndex& mp, const MultiIndex& mm) {
    check_tau_cap(mp, mm);
    const auto used = used_modes(mp, mm);
    if (used.empty()) return 1.0;
    const int n = order(mp) + order(mm);
    const FockBasis fb = abstract_fock(static_cast<int>(used.size()), n);
    std::vector<SpMat> ann, cre;
    for (int k = 0; k < static_cast<int>(used.size()); ++k) {
        ann.push_back(mode_annihilator(fb, k));
        cre.push_back(SpMat(ann.back().adjoint()));
    }
    Vec vac = Vec::Zero(fb.dim);
    vac(0) = 1.0;
    Mat rho = Mat::Zero(fb.dim, fb.dim);
    for (const TauTerm& t : tau_terms(mp, mm)) {
        const Vec x = apply_powers(ann, restrict(t.mid, used), apply_powers(cre, restrict(t.left, used), vac));
        const Vec y = apply_powers(cre, restrict(t.right, used), vac);
        // tau(A) = sum coef <x|A y> = Tr(A rho)
        rho += t.coef * y * x.adjoint();
    }
    return trace_norm(rho);
}

double tau_norm_bound(const MultiIndex& mp, const MultiIndex& mm) {
    return std::pow(4.0, order(mp) + order(mm)) * std::sqrt(mfactorial(mp) * mfactorial(mm));
}

cd tau_tensor_formula(const ModeBasis& basis, const TSpectrum& spec, const MultiIndexBundle& mu,
                      const std::vector<Vec>& fs) {
    if (static_cast<int>(fs.size()) != mu.slots()) throw SizeError("tau_tensor: one symbol per slot");
    cd r = 1.0;
    for (int i = 0; i < mu.slots(); ++i) r *= tau_formula(basis, spec, mu.plus[i], mu.minus[i], fs[i]);
    return r;
}

Measured tau_tensor_bruteforce(const ModeBasis& basis, const TSpectrum& spec, const MultiIndexBundle& mu,
                               const std::vector<Vec>& fs, int n_max) {
    if (static_cast<int>(fs.size()) != mu.slots()) throw SizeError("tau_tensor: one symbol per slot");
    std::vector<Measured> parts;
    for (int i = 0; i < mu.slots(); ++i) parts.push_back(tau_bruteforce(basis, spec, mu.plus[i], mu.minus[i], fs[i], n_max));
    Measured out;
    out.value = 1.0;
    for (const auto& p : parts) out.value *= p.value;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        double term = parts[i].eta;
        for (std::size_t j = 0; j < parts.size(); ++j)
            if (j != i) term *= std::abs(parts[j].value) + parts[j].eta;
        out.eta += term;
    }
    return out;
}

double tau_tensor_norm(const MultiIndexBundle& mu) {
    double r = 1.0;
    for (int i = 0; i < mu.slots(); ++i) r *= tau_norm(mu.plus[i], mu.minus[i]);
    return r;
}

double tau_tensor_norm_bound(const MultiIndexBundle& mu) {
    return std::pow(4.0, mu.order()) * std::sqrt(mu.factorial());
}

cd permanent(const Mat& a) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw SizeError("permanent of a non-square matrix");
    if (n == 0) return 1.0;
    if (n > 20) throw SizeError("permanent: size above 20");
    // Ryser
    cd total = 0.0;
    const std::uint32_t full = (1u << n);
    for (std::uint32_t s = 1; s < full; ++s) {
        cd prod = 1.0;
        for (int i = 0; i < n; ++i) {
            cd row = 0.0;
            for (int j = 0; j < n; ++j)
                if (s & (1u << j)) row += a(i, j);
            prod *= row;
        }
        const int bits = std::popcount(s);
        total += ((n - bits) % 2 ? -1.0 : 1.0) * prod;
    }
    return total;
}

cd vacuum_element(const Mat& gram, const MultiIndex& alpha, const MultiIndex& beta) {
    const int k = order(alpha);
    if (k != order(beta)) return 0.0;
    std::vector<int> rows, cols;
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (int n = 0; n < alpha[i]; ++n) rows.push_back(static_cast<int>(i));
    for (std::size_t j = 0; j < beta.size(); ++j)
        for (int n = 0; n < beta[j]; ++n) cols.push_back(static_cast<int>(j));
    Mat sub(k, k);
    for (int s = 0; s < k; ++s)
        for (int t = 0; t < k; ++t) sub(s, t) = gram(rows[s], cols[t]);
    return permanent(sub);
}

PairGrams pair_grams(const LocalizationFrame& frame, const TSpectrum& spec, const std::vector<double>& xs) {
    const int M = static_cast<int>(xs.size());
    const Eigen::Index K = spec.e.cols();
    const ModeBasis& b = frame.basis;
    std::vector<Mat> lp(static_cast<std::size_t>(M)), lm(static_cast<std::size_t>(M));
    for (int i = 0; i < M; ++i) {
        lp[i].resize(b.n_modes, K);
        lm[i].resize(b.n_modes, K);
        for (Eigen::Index k = 0; k < K; ++k) {
            lp[i].col(k) = translate(b, projected_eigenvector(frame, spec, static_cast<int>(k), +1), 0.0, xs[i]);
            lm[i].col(k) = translate(b, projected_eigenvector(frame, spec, static_cast<int>(k), -1), 0.0, xs[i]);
        }
    }
    PairGrams g;
    g.M = M;
    for (int i = 0; i < M; ++i) {
        for (int j = i + 1; j < M; ++j) {
            g.plus.push_back(b.dp * lp[i].adjoint() * lp[j]);
            g.minus.push_back(b.dp * lm[i].adjoint() * lm[j]);
        }
    }
    return g;
}

cd f_correlation(const PairGrams& grams, const PairBundle& a, const PairBundle& b) {
    if (a.M != grams.M || b.M != grams.M) throw SizeError("f_correlation: slot count mismatch");
    cd r = 1.0;
    for (int p = 0; p < a.pairs(); ++p) {
        const int sgn = order(a.plus[p]) + order(a.minus[p]);
        const double norm = std::sqrt(mfactorial(a.plus[p]) * mfactorial(b.plus[p]) * mfactorial(a.minus[p]) *
                                      mfactorial(b.minus[p]));
        r *= ((sgn % 2) ? -1.0 : 1.0) / norm;
        r *= vacuum_element(grams.plus[p], a.plus[p], b.plus[p]);
        r *= vacuum_element(grams.minus[p], a.minus[p], b.minus[p]);
        if (r == 0.0) return r;
    }
    return r;
}

namespace {

double tpow(const TSpectrum& spec, const MultiIndex& mu) { return mpow(spec.t, mu); }

double tpow(const TSpectrum& spec, const MultiIndexBundle& mu) {
    double r = 1.0;
    for (int i = 0; i < mu.slots(); ++i) r *= tpow(spec, mu.plus[i]) * tpow(spec, mu.minus[i]);
    return r;
}

double tpow(const TSpectrum& spec, const PairBundle& a) {
    double r = 1.0;
    for (int p = 0; p < a.pairs(); ++p) r *= tpow(spec, a.plus[p]) * tpow(spec, a.minus[p]);
    return r;
}

}  // namespace

FBound f_bound(const TSpectrum& spec, const PairBundle& a, const PairBundle& b, double g) {
    FBound out;
    out.per_pair = 1.0;
    for (int p = 0; p < a.pairs(); ++p) {
        const double num = factorial(order(a.plus[p])) * factorial(order(b.plus[p])) * factorial(order(a.minus[p])) *
                           factorial(order(b.minus[p]));
        const double den = mfactorial(a.plus[p]) * mfactorial(b.plus[p]) * mfactorial(a.minus[p]) * mfactorial(b.minus[p]);
        const int deg = order(a.plus[p]) + order(b.plus[p]) + order(a.minus[p]) + order(b.minus[p]);
        out.per_pair *= std::sqrt(num / den) * std::pow(g, deg);
    }
    out.per_pair *= tpow(spec, a) * tpow(spec, b);
    const double num = factorial(a.order_plus()) * factorial(a.order_minus()) * factorial(b.order_plus()) *
                       factorial(b.order_minus());
    out.merged = std::sqrt(num / (a.factorial() * b.factorial())) * std::pow(g, a.order() + b.order()) * tpow(spec, a) *
                 tpow(spec, b);
    return out;
}

SContext make_s_context(const EnergyWindow& window, const LocalizationFrame& frame, const TSpectrum& spec,
                        const std::vector<double>& xs) {
    SContext ctx;
    ctx.window = &window;
    ctx.frame = &frame;
    ctx.spec = &spec;
    ctx.xs = xs;
    ctx.grams = pair_grams(frame, spec, xs);
    const Eigen::Index K = spec.e.cols();
    for (double x : xs) {
        std::vector<Mat> ap, am;
        for (Eigen::Index k = 0; k < K; ++k) {
            ap.push_back(window_annihilator(
                window, translate(frame.basis, projected_eigenvector(frame, spec, static_cast<int>(k), +1), 0.0, x)));
            am.push_back(window_annihilator(
                window, translate(frame.basis, projected_eigenvector(frame, spec, static_cast<int>(k), -1), 0.0, x)));
        }
        ctx.a_plus.push_back(std::move(ap));
        ctx.a_minus.push_back(std::move(am));
    }
    return ctx;
}

namespace {

// prod a(Le_x)^mu on the window
Mat annihilator_monomial(const SContext& ctx, const MultiIndexBundle& mu) {
    const int d = ctx.window->dim();
    Mat X = Mat::Identity(d, d);
    for (int i = 0; i < mu.slots(); ++i) {
        for (std::size_t k = 0; k < mu.plus[i].size(); ++k) {
            for (int n = 0; n < mu.plus[i][k]; ++n) X = ctx.a_plus[i][k] * X;
            for (int n = 0; n < mu.minus[i][k]; ++n) X = ctx.a_minus[i][k] * X;
        }
    }
    return X;
}

// bundle <-> flat multiindex over (slot, sign, mode)
MultiIndexBundle unflatten(const MultiIndex& flat, int M, int K) {
    MultiIndexBundle b = zero_bundle(M, K);
    for (int i = 0; i < M; ++i) {
        for (int k = 0; k < K; ++k) {
            b.plus[i][k] = flat[static_cast<std::size_t>((2 * i) * K + k)];
            b.minus[i][k] = flat[static_cast<std::size_t>((2 * i + 1) * K + k)];
        }
    }
    return b;
}

}  // namespace

cd monomial_expectation(const SContext& ctx, const MultiIndexBundle& mu, const MultiIndexBundle& nu,
                        const EnergyFunctional& phi) {
    const int deg = ctx.window->degree;
    if (mu.order() > deg || nu.order() > deg) return 0.0;
    const Mat X = annihilator_monomial(ctx, mu);
    const Mat Y = annihilator_monomial(ctx, nu);
    return phi(X.adjoint() * Y);
}

cd s_functional(const SContext& ctx, const MultiIndexBundle& mu, const MultiIndexBundle& nu, const PairBundle& a,
                const PairBundle& b, const EnergyFunctional& phi) {
    const cd ipow = std::pow(I_, mu.order_plus() + nu.order_plus() + 2 * mu.order_minus());
    const double den = mu.factorial() * nu.factorial() * std::sqrt(a.factorial() * b.factorial());
    const cd F = f_correlation(ctx.grams, a, b);
    if (F == 0.0) return 0.0;
    return ipow / den * F * monomial_expectation(ctx, mu, nu, phi);
}

double mu_bound(const TSpectrum& spec, const MultiIndexBundle& mu, const MultiIndexBundle& nu, double ME) {
    return std::pow(ME, 0.5 * (mu.order() + nu.order())) * tpow(spec, mu) * tpow(spec, nu);
}

double s_bound(const TSpectrum& spec, const MultiIndexBundle& mu, const MultiIndexBundle& nu, const PairBundle& a,
               const PairBundle& b, double ME, double g) {
    const double first = mu_bound(spec, mu, nu, ME) / (mu.factorial() * nu.factorial());
    const double second = f_bound(spec, a, b, g).merged / std::sqrt(a.factorial() * b.factorial());
    return first * second;
}

SeriesBound series_bound(double trace_norm_T, int M, double ME, double g) {
    if (M < 1) throw ConfigError("series_bound needs M >= 1");
    SeriesBound out;
    const double c = 4.0 * std::sqrt(6.0 * ME) * trace_norm_T;
    double s = 0.0;
    for (int k = 0; k <= static_cast<int>(std::floor(ME)); ++k) s += std::pow(c, k) / std::sqrt(factorial(k));
    out.mu_nu = std::pow(s, 4 * M);
    out.ratio = 4.0 * std::sqrt(3.0 * M * M * M) * g * trace_norm_T;
    const int P = M * (M - 1) / 2;
    if (P == 0) {
        out.alpha_beta = 0.0;
        out.value = 0.0;
        return out;
    }
    if (out.ratio >= 1.0) {
        out.divergent = true;
        out.alpha_beta = std::numeric_limits<double>::infinity();
        out.value = std::numeric_limits<double>::infinity();
        return out;
    }
    out.alpha_beta = std::pow(1.0 - out.ratio, -4.0 * P) - 1.0;
    out.value = out.mu_nu * out.alpha_beta;
    return out;
}

IdentityCheck check_summunu(const SContext& ctx, const std::vector<Vec>& fs, const EnergyFunctional& phi) {
    const int M = static_cast<int>(fs.size());
    if (M != static_cast<int>(ctx.xs.size())) throw SizeError("check_summunu: one symbol per site");
    const ModeBasis& basis = ctx.frame->basis;
    const TSpectrum& spec = *ctx.spec;
    const int K = static_cast<int>(spec.e.cols());
    RVec flatc(2 * M * K);
    for (int i = 0; i < M; ++i) {
        const SymbolCoords c = symbol_coords(basis, spec, fs[i]);
        flatc.segment(2 * i * K, K) = c.plus;
        flatc.segment((2 * i + 1) * K, K) = c.minus;
    }
    // sum_{mu,nu} i^{|mu+|+|nu+|+2|mu-|}/(mu! nu!) <e|f>^{mu+nu} (a^mu)^* a^nu
    //   = P^* Q with P = sum conj(i^{|mu+|+2|mu-|}) <e|f>^mu / mu! a^mu, Q = sum i^{|nu+|} <e|f>^nu / nu! a^nu
    const int d = ctx.window->dim();
    Mat P = Mat::Zero(d, d), Q = Mat::Zero(d, d);
    long terms = 0;
    for (const MultiIndex& flat : multiindices_up_to(2 * M * K, ctx.window->degree)) {
        const MultiIndexBundle mu = unflatten(flat, M, K);
        const Mat X = annihilator_monomial(ctx, mu);
        const double w = mpow(flatc, flat) / mu.factorial();
        P += std::conj(std::pow(I_, mu.order_plus() + 2 * mu.order_minus())) * w * X;
        Q += std::pow(I_, mu.order_plus()) * w * X;
        ++terms;
    }
    Vec h = Vec::Zero(basis.n_modes);
    for (int i = 0; i < M; ++i) h += translate(basis, fs[i], 0.0, ctx.xs[i]);
    const cd lhs = phi(P.adjoint() * Q);
    const cd rhs = phi(window_normal_weyl(*ctx.window, h));
    IdentityCheck out;
    out.residual = std::abs(lhs - rhs);
    out.scale = std::abs(rhs);
    out.terms = terms * terms;
    // truncation is exact on the window; the only omission is the dropped T spectrum
    out.tail = 0.0;
    return out;
}

IdentityCheck check_expo11(const ModeBasis& basis, const LocalizationFrame& frame, const TSpectrum& spec,
                           const std::vector<Vec>& fs, const std::vector<double>& xs, int max_degree) {
    const int M = static_cast<int>(fs.size());
    if (M != static_cast<int>(xs.size())) throw SizeError("check_expo11: one symbol per site");
    const int K = static_cast<int>(spec.e.cols());
    const PairGrams grams = pair_grams(frame, spec, xs);
    std::vector<SymbolCoords> c;
    for (const Vec& f : fs) c.push_back(symbol_coords(basis, spec, f));
    const int kmax = max_degree / 2;
    const int P = M * (M - 1) / 2;
    // factor (pair, sign) -> coefficient of degree k:
    // sum_{|a|=|b|=k} <e|f_i>^a <e|f_j>^b (-1)^k vac(a, b) / (a! b!)
    std::vector<std::vector<cd>> coef(static_cast<std::size_t>(2 * P), std::vector<cd>(kmax + 1, 0.0));
    long terms = 0;
    std::vector<double> z_abs;
    cd log_rhs = 0.0;
    for (int i = 0; i < M; ++i) {
        for (int j = i + 1; j < M; ++j) {
            const int p = pair_index(M, i, j);
            for (int s = 0; s < 2; ++s) {
                const RVec& ci = s == 0 ? c[i].plus : c[i].minus;
                const RVec& cj = s == 0 ? c[j].plus : c[j].minus;
                const Mat& G = s == 0 ? grams.plus[p] : grams.minus[p];
                auto& row = coef[static_cast<std::size_t>(2 * p + s)];
                for (int k = 0; k <= kmax; ++k) {
                    const auto idx = multiindices_of_order(K, k);
                    for (const MultiIndex& a : idx) {
                        for (const MultiIndex& b : idx) {
                            row[k] += mpow(ci, a) * mpow(cj, b) * ((k % 2) ? -1.0 : 1.0) * vacuum_element(G, a, b) /
                                      (mfactorial(a) * mfactorial(b));
                            ++terms;
                        }
                    }
                }
                const Vec fi = translate(basis, s == 0 ? j_plus(fs[i]) : j_minus(fs[i]), 0.0, xs[i]);
                const Vec fj = translate(basis, s == 0 ? j_plus(fs[j]) : j_minus(fs[j]), 0.0, xs[j]);
                const cd z = inner(basis, fi, fj);
                log_rhs -= z;
                z_abs.push_back(std::abs(z));
            }
        }
    }
    // product of the factor series, keeping total k <= kmax, minus the empty term
    std::vector<cd> poly(kmax + 1, 0.0);
    poly[0] = 1.0;
    for (const auto& row : coef) {
        std::vector<cd> next(kmax + 1, 0.0);
        for (int u = 0; u <= kmax; ++u)
            for (int v = 0; u + v <= kmax; ++v) next[u + v] += poly[u] * row[v];
        poly = std::move(next);
    }
    cd lhs = -1.0;
    for (const cd& v : poly) lhs += v;
    const cd rhs = std::exp(log_rhs) - 1.0;
    double Z = 0.0;
    for (double z : z_abs) Z += z;
    double partial = 0.0, term = 1.0;
    for (int k = 0; k <= kmax; ++k) {
        partial += term;
        term *= Z / (k + 1);
    }
    IdentityCheck out;
    out.residual = std::abs(lhs - rhs);
    out.tail = std::max(0.0, std::exp(Z) - partial);
    out.scale = std::abs(rhs);
    out.terms = terms;
    return out;
}

IdentityCheck check_creation1(const ModeBasis& basis, const LocalizationFrame& frame, const TSpectrum& spec,
                              const Vec& f, int sign, int m_max) {
    if (sign != 1 && sign != -1) throw ConfigError("sign must be +1 or -1");
    const int K = static_cast<int>(spec.e.cols());
    const Vec fs = sign > 0 ? j_plus(f) : j_minus(f);
    std::vector<Vec> le;
    for (int k = 0; k < K; ++k) le.push_back(projected_eigenvector(frame, spec, k, sign));
    std::vector<Vec> all = le;
    all.push_back(fs);
    const ModeSet ms = span_modes(basis, all);
    const int n_max = m_max + 2;
    const FockBasis fb = build_fock(ms, n_max);
    const SymbolCoords c = symbol_coords(basis, spec, f);
    const RVec& cs = sign > 0 ? c.plus : c.minus;
    const SpMat af = annihilator(fb, coords(ms, fs));
    std::vector<SpMat> ak;
    for (const Vec& v : le) ak.push_back(annihilator(fb, coords(ms, v)));

    IdentityCheck out;
    for (int m = 1; m <= m_max; ++m) {
        Mat lhs = Mat::Identity(fb.dim, fb.dim);
        for (int n = 0; n < m; ++n) lhs = Mat(af * lhs);
        Mat rhs = Mat::Zero(fb.dim, fb.dim);
        for (const MultiIndex& mu : multiindices_of_order(K, m)) {
            Mat term = Mat::Identity(fb.dim, fb.dim);
            for (int k = 0; k < K; ++k)
                for (int n = 0; n < mu[k]; ++n) term = Mat(ak[k] * term);
            rhs += factorial(m) / mfactorial(mu) * mpow(cs, mu) * term;
            ++out.terms;
        }
        // truncated products of ladder operators are exact restrictions; the coefficients are
        // real, so the creator identity is the adjoint of this one
        out.residual = std::max(out.residual, (lhs - rhs).norm());
        out.scale = std::max(out.scale, lhs.norm());
    }
    return out;
}

}  // namespace pslab
