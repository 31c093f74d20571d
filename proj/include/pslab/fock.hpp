#pragma once

#include "pslab/common.hpp"
#include "pslab/singleparticle.hpp"

#include <limits>
#include <unordered_map>

namespace pslab {

// Orthonormal single-particle modes (columns, grid amplitudes). The first n_sharp
// are grid modes with a definite energy; the rest carry energy = +inf and are
// never inside an energy window.
struct ModeSet {
    Mat vectors;
    RVec energy;
    int n_sharp = 0;
    double dp = 0.0;
    std::vector<int> grid_index;  // grid index of each sharp mode
};

ModeSet grid_modes(const ModeBasis& basis, const std::vector<int>& indices);
ModeSet all_grid_modes(const ModeBasis& basis);
ModeSet window_modes(const ModeBasis& basis, double E);
// Window modes plus an orthonormal basis of the non-window part of span(fs).
ModeSet augmented_modes(const ModeBasis& basis, double E, const std::vector<Vec>& fs);
// Orthonormal basis of span(fs) only (all modes non-sharp).
ModeSet span_modes(const ModeBasis& basis, const std::vector<Vec>& fs);

// Mode coordinates c_k = <v_k|f>, so that a(f) = sum_k conj(c_k) a_k on span(vectors).
Vec coords(const ModeSet& modes, const Vec& f);

struct FockBasis {
    int n_modes = 0;
    int n_max = 0;
    int dim = 0;
    std::vector<std::uint8_t> occ;  // dim x n_modes, row-major
    RVec energy;
    Eigen::VectorXi number;
    std::vector<int> lower;  // dim x n_modes: index of state with n_k - 1, or -1

    int occupation(int state, int mode) const { return occ[static_cast<std::size_t>(state) * n_modes + mode]; }
    int index_of(const std::vector<std::uint8_t>& n) const;

    std::unordered_map<std::string, int> lookup;
};

inline constexpr int kDefaultFockBudget = 250000;

// Occupation vectors with sum n_k <= n_max (and energy <= e_cut when given), graded
// lexicographic order: by total number, then first mode's occupation descending.
FockBasis build_fock(const ModeSet& modes, int n_max, double e_cut = std::numeric_limits<double>::infinity(),
                     int budget = kDefaultFockBudget);
FockBasis build_fock(const ModeBasis& basis, int n_max, int budget = kDefaultFockBudget);

// Annihilator of mode k alone.
SpMat mode_annihilator(const FockBasis& fb, int k);
// a(f) from mode coordinates: <n - delta_k|a(f)|n> = conj(c_k) sqrt(n_k).
SpMat annihilator(const FockBasis& fb, const Vec& c);
SpMat creator(const FockBasis& fb, const Vec& c);

SpMat hamiltonian(const FockBasis& fb);
SpMat energy_projection(const FockBasis& fb, double E);
std::vector<int> energy_support(const FockBasis& fb, double E);

// Dense exp(i(a*(f) + a(f))). Throws TruncationRiskError when |c| > n_max/8.
Mat weyl(const FockBasis& fb, const Vec& c);
// exp(i(a*(f) + a(f))) v by Taylor steps on a vector.
Vec weyl_apply(const FockBasis& fb, const Vec& c, const Vec& v);
// exp(i a*(f)) exp(i a(f)); both factors are nilpotent on the truncated space.
Mat normal_ordered_weyl(const FockBasis& fb, const Vec& c);

// Compares W(f) against exp(-|f|^2/2) :W(f): and <Omega|W(f)|Omega> against exp(-|f|^2/2)
// on the rows and columns with at most n_max/4 particles, over span{f, extra}. eta is the change
// of both quantities under n_max -> n_max + 4.
struct WeylCalculus {
    double vacuum_err = 0.0;
    double normal_err = 0.0;
    double eta = 0.0;
    int block_particles = 0;
};
WeylCalculus weyl_calculus_check(const ModeBasis& basis, const Vec& f, const std::vector<Vec>& extra, int n_max = 12);

// Largest particle number in the given states.
int max_particles(const FockBasis& fb, const std::vector<int>& states);

// M(f)(C) = P_E exp(i a*(f)) C exp(i a(f)) P_E with both exponentials as exact
// Taylor polynomials of degree floor(E/m).
class MMap {
public:
    MMap(const FockBasis& fb, const ModeSet& modes, double E, double m, const Vec& f);
    SpMat operator()(const SpMat& c) const;
    int degree() const { return degree_; }

private:
    SpMat left_;
    SpMat right_;
    int degree_ = 0;
};

// Positive normal functional supported on ran P_E, stored as a convex combination of
// pure states in the coordinates of the P_E block.
struct EnergyFunctional {
    std::vector<Vec> vectors;
    RVec weights;
    double E = 0.0;

    int dim() const { return vectors.empty() ? 0 : static_cast<int>(vectors.front().size()); }
    Mat rho() const;
    cd operator()(const Mat& block) const;
};

enum class SampleMode { Auto, Pure, Mixture };

EnergyFunctional sample_energy_functional(int block_dim, double E, std::uint64_t seed,
                                          std::uint64_t index = 0, SampleMode mode = SampleMode::Auto);
EnergyFunctional vacuum_functional(int block_dim, double E);

// Self-adjoint-decomposed functional (phi_Re+ - phi_Re- + i(phi_Im+ - phi_Im-))/4.
Mat sample_signed_density(int block_dim, std::uint64_t seed, std::uint64_t index = 0);

// Exact compressed Weyl algebra on the window of states with energy <= E over the
// grid modes with omega <= E. a(h) restricted to that window only sees the window
// components of h, so everything below is exact.
struct EnergyWindow {
    ModeBasis basis;
    double E = 0.0;
    ModeSet modes;
    FockBasis fb;
    struct Entry {
        int row, col, mode;
        double amp;
    };
    std::vector<Entry> lowering;  // nonzeros of the per-mode annihilators on the window
    int degree = 0;               // floor(E/m)

    int dim() const { return fb.dim; }
};

EnergyWindow build_energy_window(const ModeBasis& basis, double E);

// a(h) on the window.
Mat window_annihilator(const EnergyWindow& w, const Vec& h);
// P_E exp(i a(h)) P_E on the window.
Mat window_exp_annihilator(const EnergyWindow& w, const Vec& h);
// P_E :W(h): P_E and P_E W(h) P_E.
Mat window_normal_weyl(const EnergyWindow& w, const Vec& h);
Mat window_weyl(const EnergyWindow& w, const Vec& h);

// Same operators from window coordinates c = coords(w.modes, h), which are linear in h.
Mat window_annihilator_coords(const EnergyWindow& w, const Vec& c);
Mat window_exp_annihilator_coords(const EnergyWindow& w, const Vec& c);
Mat window_normal_weyl_coords(const EnergyWindow& w, const Vec& c);

}  // namespace pslab
