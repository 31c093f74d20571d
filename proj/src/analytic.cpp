#include "pslab/analytic.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

namespace pslab {

namespace {

constexpr double kPi = std::numbers::pi;

// Offset below which the log substitution stops; the neglected piece is at most
// sup|f| times this.
constexpr double kEdgeFloor = 1e-15;

const GaussRule& cached_rule(int n) {
    static std::mutex mu;
    static std::map<int, GaussRule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n)).first;
    return it->second;
}

cd panel(const std::function<cd(double)>& f, double a, double b, const GaussRule& rule) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    cd s{0.0, 0.0};
    for (int k = 0; k < rule.x.size(); ++k) s += rule.w(k) * f(c + h * rule.x(k));
    return h * s;
}

// Panel bisection until each panel agrees with its two halves.
QuadResult adaptive(const std::function<cd(double)>& f, double a, double b, double tol, int order,
                    int min_panels) {
    const GaussRule& rule = cached_rule(order);
    QuadResult out;
    struct Item {
        double a, b;
        cd whole;
        int depth;
    };
    std::vector<Item> stack;
    const int n0 = std::max(1, min_panels);
    const double w = (b - a) / n0;
    for (int i = n0 - 1; i >= 0; --i) {
        const double lo = a + i * w;
        const double hi = (i == n0 - 1) ? b : a + (i + 1) * w;
        stack.push_back({lo, hi, panel(f, lo, hi, rule), 0});
        out.evals += order;
    }
    const double len = b - a;
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        const double mid = 0.5 * (it.a + it.b);
        const cd left = panel(f, it.a, mid, rule);
        const cd right = panel(f, mid, it.b, rule);
        out.evals += 2 * order;
        const double diff = std::abs(left + right - it.whole);
        const double local_tol = tol * (it.b - it.a) / len;
        if (diff <= local_tol || it.depth >= 40) {
            out.value += left + right;
            out.err += diff;
        } else {
            stack.push_back({mid, it.b, right, it.depth + 1});
            stack.push_back({it.a, mid, left, it.depth + 1});
        }
    }
    return out;
}

// Integral of f over the width-sized strip next to `end` (inside when dir = +1 for a left
// end, dir = -1 for a right end), via phi = end + dir*exp(-s).
QuadResult edge_piece(const std::function<cd(double)>& f, double end, int dir, double width, double tol,
                      int order) {
    const double s0 = -std::log(width);
    const double s1 = -std::log(kEdgeFloor);
    double sup = 0.0;
    auto g = [&](double s) {
        const double e = std::exp(-s);
        const cd v = f(end + dir * e);
        sup = std::max(sup, std::abs(v));
        return v * e;
    };
    const int panels = std::max(4, static_cast<int>(std::ceil((s1 - s0) / 2.0)));
    QuadResult r = adaptive(g, s0, s1, tol, order, panels);
    r.err += sup * kEdgeFloor;
    return r;
}

// Pole angles of z on the unit circle, sorted into (-pi, pi].
std::vector<double> pole_angles(double gamma) {
    return {-(kPi - gamma), -gamma, gamma, kPi - gamma};
}

}  // namespace

double DampingParams::gamma() const { return 2.0 * std::atan(std::exp(-kPi * delta / (2.0 * beta))); }

DampingParams make_damping(double beta, double delta) {
    if (!(beta > 0.0) || !(delta > 0.0)) throw ConfigError("damping needs beta > 0 and delta > 0");
    return {beta, delta};
}

double g_function(const DampingParams& p, double phi) {
    const double gm = p.gamma();
    for (double s : pole_angles(gm)) {
        if (phi == s) throw PoleError("g is singular at +-gamma and +-(pi-gamma)");
    }
    const double prod = std::abs(1.0 / std::tan(0.5 * (phi + gm)) / std::tan(0.5 * (phi - gm)));
    if (!(prod > 0.0) || !std::isfinite(prod)) throw PoleError("g evaluated at a singular angle");
    return p.beta / kPi * std::log(prod);
}

cd conformal_map(const DampingParams& p, cd w) {
    if (std::abs(w) > 1.0 + 1e-14) throw PreconditionError("conformal map needs |w| <= 1");
    const double gm = p.gamma();
    const cd u = w * std::polar(1.0, gm);
    const cd v = w * std::polar(1.0, -gm);
    if (std::abs(1.0 - u) == 0.0 || std::abs(1.0 + u) == 0.0 || std::abs(1.0 - v) == 0.0 ||
        std::abs(1.0 + v) == 0.0)
        throw PoleError("conformal map evaluated at a boundary pole");
    // both ratios have nonnegative real part on the closed disc, so principal logs are continuous
    return p.beta / kPi * (std::log((1.0 + u) / (1.0 - u)) - std::log((1.0 - v) / (1.0 + v)));
}

GaussRule gauss_legendre(int n) {
    if (n < 1) throw ConfigError("Gauss-Legendre order must be positive");
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = b;
        J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    GaussRule r;
    r.x = es.eigenvalues();
    r.w = 2.0 * es.eigenvectors().row(0).transpose().array().square();
    return r;
}

QuadResult integrate(const std::function<cd(double)>& f, double a, double b, bool sing_a, bool sing_b,
                     double tol, int order, int min_panels) {
    if (!(b > a)) return {};
    const double len = b - a;
    const double edge = std::min(0.05, 0.25 * len);
    double lo = a, hi = b;
    QuadResult out;
    int parts = 1 + (sing_a ? 1 : 0) + (sing_b ? 1 : 0);
    const double ptol = tol / parts;
    if (sing_a) {
        QuadResult e = edge_piece(f, a, +1, edge, ptol, order);
        out.value += e.value;
        out.err += e.err;
        out.evals += e.evals;
        lo = a + edge;
    }
    if (sing_b) {
        QuadResult e = edge_piece(f, b, -1, edge, ptol, order);
        out.value += e.value;
        out.err += e.err;
        out.evals += e.evals;
        hi = b - edge;
    }
    QuadResult mid = adaptive(f, lo, hi, ptol, order, min_panels);
    out.value += mid.value;
    out.err += mid.err;
    out.evals += mid.evals;
    return out;
}

ArcWeights arc_weights(const DampingParams& p, double w, int quadrature_n) {
    if (quadrature_n < 64) throw ConfigError("quadrature_n must be at least 64");
    const double gm = p.gamma();
    const int order = 16;
    const int panels = quadrature_n / order;
    auto f = [&](double phi) { return std::exp(I_ * (w * g_function(p, phi))); };
    const QuadResult r1 = integrate(f, 0.0, gm, false, true, 1e-13, order, panels);
    const QuadResult r2 = integrate(f, kPi - gm, kPi, true, false, 1e-13, order, panels);
    const QuadResult r3 = integrate(f, gm, kPi - gm, true, true, 1e-13, order, panels);
    ArcWeights out;
    out.ring = (r1.value + r2.value) / (2.0 * kPi);
    out.inner = r3.value / (2.0 * kPi);
    out.err = (r1.err + r2.err + r3.err) / (2.0 * kPi);
    return out;
}

Mat hermitian_exp(const Mat& H, double s) {
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    const Mat& V = es.eigenvectors();
    return V * (s * es.eigenvalues().array()).exp().matrix().cast<cd>().asDiagonal() * V.adjoint();
}

Smeared smear_operators(const Mat& B, const Mat& H, const DampingParams& p, int quadrature_n) {
    if (B.rows() != H.rows() || B.cols() != H.cols() || H.rows() != H.cols())
        throw SizeError("smear_operators: B and H must be square of equal size");
    if ((H - H.adjoint()).norm() > 1e-10 * std::max(1.0, H.norm()))
        throw PreconditionError("smear_operators: H must be Hermitian");
    Eigen::SelfAdjointEigenSolver<Mat> es(H);
    const Mat& V = es.eigenvectors();
    const RVec& e = es.eigenvalues();
    const Mat Bt = V.adjoint() * B * V;
    const int n = static_cast<int>(H.rows());

    // B(t)_ab = exp(i t (e_a - e_b)) Bt_ab in the eigenbasis; one scalar integral per pair
    // the weight at -w is the conjugate of the one at w; the diagonal is closed form
    std::vector<ArcWeights> w(static_cast<std::size_t>(n) * n);
    const double gm = p.gamma();
    for (int a = 0; a < n; ++a)
        w[static_cast<std::size_t>(a) * n + a] = {cd(gm / kPi), cd((kPi - 2.0 * gm) / (2.0 * kPi)), 0.0};
    const int pairs = n * (n - 1) / 2;
    std::vector<std::pair<int, int>> upper;
    upper.reserve(pairs);
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) upper.emplace_back(a, b);
    parallel_for(pairs, [&](int k) {
        const auto [a, b] = upper[k];
        const ArcWeights x = arc_weights(p, e(a) - e(b), quadrature_n);
        w[static_cast<std::size_t>(a) * n + b] = x;
        w[static_cast<std::size_t>(b) * n + a] = {std::conj(x.ring), std::conj(x.inner), x.err};
    });
    Mat ring(n, n), inner(n, n);
    double err = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const ArcWeights& x = w[static_cast<std::size_t>(a) * n + b];
            ring(a, b) = x.ring * Bt(a, b);
            inner(a, b) = x.inner * Bt(a, b);
            err += x.err * std::abs(Bt(a, b));
        }
    }
    Smeared out;
    out.ring = V * ring * V.adjoint();
    out.inner = V * inner * V.adjoint();
    out.err = err;
    const double bn = op_norm(B);
    if (err > 1e-8 * std::max(bn, 1e-300)) {
        throw QuadratureError("smear_operators: estimated error " + std::to_string(err) + " exceeds 1e-8 |B| = " +
                              std::to_string(1e-8 * bn));
    }
    return out;
}

ClaimResidual verify_claim_identity(const Mat& A, const Mat& B, const Mat& H, const DampingParams& p,
                                    const Vec& psi1, const Vec& psi2, int quadrature_n) {
    const Smeared s = smear_operators(B, H, p, quadrature_n);
    const Mat up = hermitian_exp(H, p.beta);
    const Mat down = hermitian_exp(H, -p.beta);
    auto phi = [&](const Mat& X) { return psi1.dot(X * psi2); };
    ClaimResidual out;
    out.lhs = phi(A * B);
    const cd rhs = phi(A * s.ring + s.ring * A) + phi(A * down * s.inner * up) + phi(up * s.inner * down * A);
    out.residual = std::abs(out.lhs - rhs);
    out.quad_err = s.err;
    return out;
}

TensorInstance sample_tensor_instance(int d1, int d2, std::uint64_t seed, std::uint64_t index) {
    Rng rng = make_rng(seed, 0xc1a1, index);
    auto gauss = [&](int r, int c) {
        Mat m(r, c);
        for (int j = 0; j < c; ++j)
            for (int i = 0; i < r; ++i) m(i, j) = complex_gaussian(rng);
        return m;
    };
    auto positive = [&](int d) {
        Mat g = gauss(d, d);
        Mat h = g * g.adjoint() / static_cast<double>(d);
        return Mat(0.5 * (h + h.adjoint()));
    };
    const Mat H1 = positive(d1), H2 = positive(d2);
    Mat A1 = gauss(d1, d1), B2 = gauss(d2, d2);
    A1 /= op_norm(A1);
    B2 /= op_norm(B2);
    const Mat I1 = Mat::Identity(d1, d1), I2 = Mat::Identity(d2, d2);
    auto kron = [](const Mat& x, const Mat& y) {
        Mat k(x.rows() * y.rows(), x.cols() * y.cols());
        for (int i = 0; i < x.rows(); ++i)
            for (int j = 0; j < x.cols(); ++j) k.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
        return k;
    };
    TensorInstance t;
    t.H = kron(H1, I2) + kron(I1, H2);
    t.A = kron(A1, I2);
    t.B = kron(I1, B2);
    t.psi1 = gauss(d1 * d2, 1).col(0).normalized();
    t.psi2 = gauss(d1 * d2, 1).col(0).normalized();
    return t;
}

Mat xi_map(const Mat& A, const Mat& H, double beta) {
    if (!(beta > 0.0)) throw ConfigError("xi_map needs beta > 0");
    const Mat d = hermitian_exp(H, -beta);
    return d * A * d;
}

Mat xi_map(const Mat& A, const Mat& H, double beta1, double beta2, double delta, int quadrature_n) {
    if (!(beta1 > 0.0)) throw ConfigError("xi_map needs beta1 > 0");
    const Smeared s = smear_operators(A, H, make_damping(beta2, delta), quadrature_n);
    const Mat d = hermitian_exp(H, -beta1);
    return d * s.inner * d;
}

QuadResult cauchy_disc_mean(const DampingParams& p, double r) {
    if (!(r >= 0.0) || r > 1.0) throw PreconditionError("cauchy_disc_mean needs 0 <= r <= 1");
    const double gm = p.gamma();
    auto f = [&](double phi) {
        const cd z = conformal_map(p, r * std::polar(1.0, phi));
        return z * z;
    };
    const bool sing = (r == 1.0);
    std::vector<double> cuts{-kPi};
    for (double s : pole_angles(gm)) cuts.push_back(s);
    cuts.push_back(kPi);
    QuadResult out;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const bool sa = sing && k > 0;
        const bool sb = sing && k + 2 < cuts.size();
        QuadResult q = integrate(f, cuts[k], cuts[k + 1], sa, sb, 1e-12, 16, 8);
        out.value += q.value;
        out.err += q.err;
        out.evals += q.evals;
    }
    out.value /= 2.0 * kPi;
    out.err /= 2.0 * kPi;
    return out;
}

}  // namespace pslab
