#pragma once

#include "pslab/common.hpp"

#include <array>

namespace pslab {

// Symmetric uniform momentum grid, s = 1.
struct ModeBasis {
    double m = 1.0;
    RVec p;
    RVec omega;
    double dp = 0.0;
    int n_modes = 0;
};

ModeBasis build_mode_basis(double m, double p_max, int n_modes);

// <f|g> = dp * sum conj(f_k) g_k
cd inner(const ModeBasis& basis, const Vec& f, const Vec& g);
double norm(const ModeBasis& basis, const Vec& f);

// (U(t,x) f)(p) = exp(i(omega t - p x)) f(p)
Vec translate(const ModeBasis& basis, const Vec& f, double t, double x);

// (Jf)(p) = conj(f(-p)); the grid is symmetric so -p_k is index n-1-k.
Vec conjugate_J(const Vec& f);
Vec j_plus(const Vec& f);   // (f + Jf)/2
Vec j_minus(const Vec& f);  // (f - Jf)/(2i), so f = f+ + i f-

// Momentum-space transform of a real profile sampled on xs (trapezoid rule).
Vec fourier(const ModeBasis& basis, const RVec& xs, const RVec& values);
// Back to configuration space at the points xs.
Vec inverse_fourier(const ModeBasis& basis, const Vec& f, const RVec& xs);

double bump(double x, double r, int k);

struct LocalizationFrame {
    ModeBasis basis;
    double r = 0.0;
    int n_test = 0;
    Mat plus;   // columns: orthonormal, omega^{-1/2} * transformed bumps
    Mat minus;  // columns: orthonormal, omega^{+1/2} * transformed bumps
    double ell = 0.0;
};

LocalizationFrame build_localization_frame(const ModeBasis& basis, double r, int n_test);

Vec project_plus(const LocalizationFrame& frame, const Vec& f);
Vec project_minus(const LocalizationFrame& frame, const Vec& f);

// sum_i a_i u+_i + i sum_j b_j u-_j; a and b real.
Vec weyl_symbol(const LocalizationFrame& frame, const RVec& a, const RVec& b);

struct TSpectrum {
    RVec t;      // kept eigenvalues, descending
    Mat e;       // kept eigenvectors (grid amplitudes), J-invariant, orthonormal
    RVec t_all;  // every eigenvalue of the low-rank problem
    double trace_norm = 0.0;
    std::array<double, 4> parts{};  // |T_E+|_1, |T_E-|_1, |T_k+|_1, |T_k-|_1
    double E = 0.0;
    double kappa = 0.0;
    int dropped = 0;
    double dropped_weight = 0.0;
};

TSpectrum build_T_spectrum(const LocalizationFrame& frame, double E, double kappa);

// T^2 f assembled from the four constituents.
Vec T_squared_apply(const LocalizationFrame& frame, double E, double kappa, const Vec& f);

// Replaces the columns of v (one degenerate cluster) by a J-invariant orthonormal basis
// of the same span.
Mat j_symmetrize_cluster(const ModeBasis& basis, const Mat& v);

// <L^s e_i translated by x | L^s e_j translated by y>, s = +1 or -1.
cd two_point_correlation(const LocalizationFrame& frame, const TSpectrum& spec, int i, int j,
                         double x, double y, int sign);

// Projected eigenvector L^s e_i (not translated).
Vec projected_eigenvector(const LocalizationFrame& frame, const TSpectrum& spec, int i, int sign);

// g(delta)^2 = max |corr_ij(d)| / (t_i t_j) over i, j, signs and d in [2r + delta, pi/dp].
double measure_g(const LocalizationFrame& frame, const TSpectrum& spec, double delta,
                 double d_step = 0.05);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
};

// Least-squares fit of log|corr(d)| over the given separations.
SlopeFit fit_log_slope(const RVec& d, const RVec& values);

}  // namespace pslab
