#pragma once

#include "pslab/common.hpp"

#include <functional>

namespace pslab {

struct DampingParams {
    double beta = 1.0;
    double delta = 1.0;

    double gamma() const;  // 2 arctan exp(-pi delta / 2 beta)
};

DampingParams make_damping(double beta, double delta);

// (beta/pi) ln|cot((phi+gamma)/2) cot((phi-gamma)/2)|. Throws PoleError at
// +-gamma and +-(pi-gamma).
double g_function(const DampingParams& p, double phi);

// Unit disc -> slit strip. Throws PoleError at w = +-exp(+-i gamma).
cd conformal_map(const DampingParams& p, cd w);

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch).
struct GaussRule {
    RVec x;
    RVec w;
};
GaussRule gauss_legendre(int n);

struct QuadResult {
    cd value{0.0, 0.0};
    double err = 0.0;
    int evals = 0;
};

// Adaptive Gauss-Legendre on [a, b]. An endpoint flagged singular gets a log
// substitution phi = end +- exp(-s) over a window of width `edge`, which turns a
// logarithmic blowup of g into a decaying exponential.
QuadResult integrate(const std::function<cd(double)>& f, double a, double b, bool sing_a, bool sing_b,
                     double tol = 1e-13, int order = 16, int min_panels = 4);

// (1/2 pi) int over the two ring arcs [0,gamma] u [pi-gamma,pi] and the inner arc
// [gamma, pi-gamma] of exp(i w g(phi)).
struct ArcWeights {
    cd ring{0.0, 0.0};
    cd inner{0.0, 0.0};
    double err = 0.0;
};
ArcWeights arc_weights(const DampingParams& p, double w, int quadrature_n = 512);

struct Smeared {
    Mat ring;   // B-ring_beta
    Mat inner;  // B_beta
    double err = 0.0;
};

// B(t) = exp(itH) B exp(-itH) averaged over the arcs. H must be Hermitian.
// Throws QuadratureError when the estimated error exceeds 1e-8 |B|.
Smeared smear_operators(const Mat& B, const Mat& H, const DampingParams& p, int quadrature_n = 512);

// |phi(AB) - phi([A, B-ring]_+) - phi(A e^{-bH} B_b e^{bH}) - phi(e^{bH} B_b e^{-bH} A)|
// with phi = <psi1| . psi2>.
struct ClaimResidual {
    double residual = 0.0;
    cd lhs{0.0, 0.0};
    double quad_err = 0.0;
};
ClaimResidual verify_claim_identity(const Mat& A, const Mat& B, const Mat& H, const DampingParams& p,
                                    const Vec& psi1, const Vec& psi2, int quadrature_n = 512);

// Random instance with H = H1 x 1 + 1 x H2, A = A1 x 1, B = 1 x B2, so that
// [A(t), B] = 0 for every t.
struct TensorInstance {
    Mat A, B, H;
    Vec psi1, psi2;
};
TensorInstance sample_tensor_instance(int d1, int d2, std::uint64_t seed, std::uint64_t index = 0);

// exp(-beta H) A exp(-beta H)
Mat xi_map(const Mat& A, const Mat& H, double beta);
// exp(-beta1 H) A_{beta2} exp(-beta1 H), A_{beta2} the inner smearing at delta.
Mat xi_map(const Mat& A, const Mat& H, double beta1, double beta2, double delta, int quadrature_n = 512);

// exp(s H) for Hermitian H.
Mat hermitian_exp(const Mat& H, double s);

// (1/2 pi) int z(r e^{i phi})^2 d phi, which equals z(0)^2 = 0 for r < 1.
QuadResult cauchy_disc_mean(const DampingParams& p, double r);

}  // namespace pslab
