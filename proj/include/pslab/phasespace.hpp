#pragma once

#include "pslab/common.hpp"
#include "pslab/fock.hpp"
#include "pslab/multiindex.hpp"
#include "pslab/singleparticle.hpp"

#include <functional>
#include <string>

namespace pslab {

// Sites x_1..x_N of translated double cones with base [-r, r].
struct AdmissibleConfig {
    std::vector<double> xs;
    double delta = 0.0;
    double r = 0.0;

    int size() const { return static_cast<int>(xs.size()); }
};

// |x_i - x_j| >= 2r + delta for all i != j, up to a relative 1e-12 for rounding.
bool is_admissible(const AdmissibleConfig& cfg);

// Brute force: samples points of O + x1 and O + x2 + t e0 (open cones, grid x grid
// points each) and checks that every interval between them is spacelike.
bool cones_spacelike(double x1, double x2, double t, double r, int grid = 24);
// cones_spacelike for every pair and every t on a grid of ]-delta, delta[.
bool admissible_by_sampling(const AdmissibleConfig& cfg, int t_samples = 41, int grid = 24);

// Uniform over admissible configurations inside [0, window], in random order.
AdmissibleConfig sample_admissible(int N, double delta, double r, double window, Rng& rng);
// x_i = offset + i (2r + delta)
AdmissibleConfig equally_spaced(int N, double delta, double r, double offset = 0.0);

// A = sum_k c_k (W(f_k) - exp(-|f_k|^2/2) I). Centered, and |A| <= sum_k |c_k| (1 + exp(-|f_k|^2/2)).
struct WeylTerm {
    cd coeff{1.0, 0.0};
    Vec f;
};
struct Slot {
    std::vector<WeylTerm> terms;
};

double slot_norm_bound(const ModeBasis& basis, const Slot& s);
// Rescales the coefficients so that slot_norm_bound == 1.
Slot normalized(const ModeBasis& basis, Slot s);
Slot single_weyl_slot(const Vec& f, cd coeff = 1.0);
// (W(f) + W(-f))/2 - exp(-|f|^2/2) I, self-adjoint.
Slot hermitian_slot(const Vec& f);

struct SlotSampling {
    int max_terms = 3;
    double norm_lo = 0.5;  // range of |f_k|
    double norm_hi = 1.5;
};

// 1..max_terms Weyl symbols built from the frame, normalized so that |A| <= 1.
Slot sample_slot(const LocalizationFrame& frame, Rng& rng, const SlotSampling& opt = {});

// P_E A_1(x_1)...A_N(x_N) P_E on the energy window, assembled from the Weyl relation
// W(g_1)...W(g_n) = exp(-i sum_{p<q} Im<g_p|g_q>) W(g_1 + ... + g_n).
Mat form_matrix(const EnergyWindow& w, const std::vector<Slot>& slots, const std::vector<double>& xs);

// phi(A_1(x_1)...A_N(x_N))
cd evaluate_form(const EnergyWindow& w, const EnergyFunctional& phi, const std::vector<Slot>& slots,
                 const std::vector<double>& xs);

// Same value by applying each W(f_{k,x_i}) to the state vectors on a Fock space over
// span{window part of phi, all translated symbols}, truncated at n_max; eta from n_max + 4.
// Requires E < 2m so the window states carry at most one particle.
Measured evaluate_form_bruteforce(const EnergyWindow& w, const EnergyFunctional& phi,
                                 const std::vector<Slot>& slots, const std::vector<double>& xs, int n_max = 8);

// Partition expansion of phi((W(f_1,x_1) - w0)...(W(f_N,x_N) - w0)) with normal-ordered terms.
cd crucial_expansion(const EnergyWindow& w, const EnergyFunctional& phi, const std::vector<Vec>& fs,
                     const std::vector<double>& xs);
// exp(-sum |f|^2/2) (exp(-sum_{i<j} Re<f_i,x_i|f_j,x_j>) - 1) phi(:W(sum f_x):)
cd pi_prime(const EnergyWindow& w, const EnergyFunctional& phi, const std::vector<Vec>& fs,
            const std::vector<double>& xs);
// sum_{R1,R2} (-1)^|R2| prod_{R2} w0(W(f_j)) pi_prime over R1; equals the form when N > 2E/m.
cd pi_prime_expansion(const EnergyWindow& w, const EnergyFunctional& phi, const std::vector<Vec>& fs,
                      const std::vector<double>& xs);

struct SVanishing {
    double residual = 0.0;     // max |S| over the functionals
    double route_diff = 0.0;   // max |alternating sum - M-map product|
    double scale = 0.0;        // max intermediate matrix norm
    int functionals = 0;
};

// S = sum_{R1,R2} (-1)^|R2| phi(:W(sum_{R1} f_x):) by the alternating sum and by
// (M(f_1,x_1) - M(0))...(M(f_N,x_N) - M(0))(I). Throws PreconditionError if N <= 2E/m.
SVanishing s_vanishing_check(const EnergyWindow& w, const std::vector<Vec>& fs, const std::vector<double>& xs,
                             const std::vector<EnergyFunctional>& phis);
// The M-map product as a block on the window, computed with the MMap class on a Fock space over
// the window modes and the non-window parts of the translated symbols, truncated at n_max.
Mat s_product_fock(const EnergyWindow& w, const std::vector<Vec>& fs, const std::vector<double>& xs, int n_max);
// Same product from the window engine.
Mat s_product_window(const EnergyWindow& w, const std::vector<Vec>& fs, const std::vector<double>& xs);

struct ScanRow {
    double parameter = 0.0;
    double estimate = 0.0;
    double bound = 0.0;  // NaN when there is none
    int samples = 0;
    double eta = 0.0;
    std::string kind;  // exact | lower-bound | quadrature
};

struct ScanResult {
    std::string name;
    std::string parameter;
    std::uint64_t seed = 0;
    std::vector<ScanRow> rows;
};

struct PiNormSample {
    std::vector<Slot> slots;
    std::vector<double> jitter;  // extra gap per neighbour pair, in [0, 0.5)
};

// Shared across delta: sample k depends only on (seed, k).
PiNormSample sample_pinorm_family(const LocalizationFrame& frame, int N, std::uint64_t seed, int k);
std::vector<double> pinorm_sites(const PiNormSample& s, double delta, double r);

struct PiNormEntry {
    double delta = 0.0;
    double best = 0.0;         // max over samples of |P_E A_1(x_1)...A_N(x_N) P_E|
    int best_index = -1;
    double best_phi = 0.0;     // max |phi(...)| over sampled positive phi at the best sample
    std::vector<double> values;
};

PiNormEntry pi_norm_estimate(const EnergyWindow& w, const LocalizationFrame& frame, int N, double delta,
                             int samples, std::uint64_t seed);

// Size of the largest subset with pairwise distance > eps (exact; at most 64 points).
int epsilon_content(int n_points, const std::function<double(int, int)>& dist, double eps);
// Sup-metric points: rows are image points, columns are slot sets.
int epsilon_content(const Mat& points, double eps);
double diameter(const Mat& points);

// Row p = (phi_p, x_p) evaluated on J shared slot sets.
Mat form_image(const EnergyWindow& w, const LocalizationFrame& frame, int N, double delta, int n_points,
               int n_slot_sets, std::uint64_t seed);

struct AveragingEntry {
    int n = 0;
    double delta = 0.0;
    double measured = 0.0;  // max |phi(Q_n)| over the sampled positive phi
    double exact_sup = 0.0; // |P_E Q_n P_E|
    double sup_term = 0.0;  // max over distinct ordered N-tuples of |P_E A(x_i1)...A(x_iN) P_E|
    double remainder = 0.0; // (n^N - binom(n, N) N!) / n^N |A|^N
    double bound = 0.0;     // (sup_term + remainder)^{1/N}
    int samples = 0;
};

// Q_n = (1/n) sum_i A(x_i) with x_i equally spaced at 2r + delta. N must be a power of two.
AveragingEntry averaging_experiment(const EnergyWindow& w, const Slot& A, int n, double delta, double r, int N,
                                    int samples, std::uint64_t seed);

// omega_0(A B(lambda)) for A = W(f) - w0, B = W(g) - w0.
cd clustering_closed_form(const ModeBasis& basis, const Vec& f, const Vec& g, double lambda);
Measured clustering_trace(const ModeBasis& basis, const Vec& f, const Vec& g, double lambda, int n_max = 12);

struct ClusteringRow {
    double lambda = 0.0;
    cd closed{0.0, 0.0};
    Measured trace;
};
std::vector<ClusteringRow> clustering_experiment(const ModeBasis& basis, const Vec& f, const Vec& g,
                                                 const std::vector<double>& lambdas, int n_max = 12);

// Average of F over K_L = [-L^eps, L^eps] x [-L, L] by a product trapezoid rule.
inline constexpr int kPppPoints = 33;
inline constexpr long kPppBudget = 1L << 20;
double ppp_average(const std::function<double(double, double)>& F, double L, double eps_exponent,
                   int points = kPppPoints);

// omega(alpha_x A) for omega = a*(h)Omega (|h| = 1) and A = W(f) - w0:
// -exp(-|f|^2/2) |<f_x|h>|^2.
double one_particle_expectation(const ModeBasis& basis, const Vec& f, const Vec& h, double t, double x);
// Same by weyl_apply on a Fock space over span{f_x, h}.
Measured one_particle_expectation_fock(const ModeBasis& basis, const Vec& f, const Vec& h, double t, double x,
                                      int n_max = 12);

struct PppRow {
    double L = 0.0;
    double average = 0.0;
    double deviation = 0.0;  // |average - omega_0(A)|, omega_0(A) = 0
};
std::vector<PppRow> ppp_averaging(const ModeBasis& basis, const Vec& f, const Vec& h,
                                  const std::vector<double>& Ls, double eps_exponent = 0.5,
                                  int points = kPppPoints);

struct SharpRow {
    double radius = 0.0;
    int dim = 0;             // states in the spectral ball
    bool vacuum_only = false;
    double sup = 0.0;        // sup over T_(p,r),1 of |phi(A) - phi(I) w0(A)| = |Q (A - w0(A)) Q|
};

// A = W(f) on the grid window of energy p0 + max radius; P = sum_k p_k n_k.
std::vector<SharpRow> sharp_momentum_experiment(const ModeBasis& basis, double p0, double p1,
                                                const std::vector<double>& radii, const Vec& f);

}  // namespace pslab
