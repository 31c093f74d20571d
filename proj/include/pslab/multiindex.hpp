#pragma once

#include "pslab/common.hpp"
#include "pslab/fock.hpp"
#include "pslab/singleparticle.hpp"

namespace pslab {

// Dense exponent vector over the kept T-eigenbasis.
using MultiIndex = std::vector<int>;

int order(const MultiIndex& mu);
double mfactorial(const MultiIndex& mu);
MultiIndex operator+(const MultiIndex& a, const MultiIndex& b);
bool is_zero(const MultiIndex& mu);

// All multiindices over K modes with |mu| == k, in lexicographic order (first entry descending).
std::vector<MultiIndex> multiindices_of_order(int K, int k);
std::vector<MultiIndex> multiindices_up_to(int K, int kmax);

// prod_k c_k^{mu_k}
template <class Scalar>
Scalar mpow(const VectorX<Scalar>& c, const MultiIndex& mu) {
    Scalar r(1);
    for (std::size_t k = 0; k < mu.size(); ++k)
        for (int n = 0; n < mu[k]; ++n) r *= c(static_cast<Eigen::Index>(k));
    return r;
}

// M slots, each with a plus and a minus multiindex.
struct MultiIndexBundle {
    std::vector<MultiIndex> plus, minus;

    int slots() const { return static_cast<int>(plus.size()); }
    int order() const;
    int order_plus() const;
    int order_minus() const;
    double factorial() const;
};

MultiIndexBundle zero_bundle(int M, int K);
MultiIndexBundle operator+(const MultiIndexBundle& a, const MultiIndexBundle& b);

// One plus and one minus multiindex per pair i < j, stored in pair_index order.
struct PairBundle {
    int M = 0;
    std::vector<MultiIndex> plus, minus;

    int pairs() const { return static_cast<int>(plus.size()); }
    int order() const;
    int order_plus() const;
    int order_minus() const;
    double factorial() const;
};

int pair_index(int M, int i, int j);
PairBundle zero_pairs(int M, int K);

struct Arrows {
    MultiIndexBundle right;  // alpha->_i = sum_{j>i} alpha_ij
    MultiIndexBundle left;   // alpha<-_i = sum_{j<i} alpha_ji
};
Arrows arrows(const PairBundle& a);

struct Partition {
    std::vector<int> r1, r2;  // 0-based, ascending
};
inline constexpr int kPartitionCap = 12;
// All 2^N splittings, grouped by |R2| ascending, R1 in lexicographic order within a group.
std::vector<Partition> ordered_partitions(int N, int cap = kPartitionCap);

// Coordinates <e_k|f+>, <e_k|f-> (real for J-invariant e_k).
struct SymbolCoords {
    RVec plus, minus;
};
SymbolCoords symbol_coords(const ModeBasis& basis, const TSpectrum& spec, const Vec& f);

// exp(-|f|^2/2) <e|f+>^mu+ <e|f->^mu-
cd tau_formula(const ModeBasis& basis, const TSpectrum& spec, const MultiIndex& mp, const MultiIndex& mm,
               const Vec& f);

struct Measured {
    cd value{0.0, 0.0};
    double eta = 0.0;  // |value(n_max) - value(n_max + 4)|
};

inline constexpr int kTauCap = 6;

// Triple sum of vacuum matrix elements on the Fock space over the used e_k and f.
Measured tau_bruteforce(const ModeBasis& basis, const TSpectrum& spec, const MultiIndex& mp, const MultiIndex& mm,
                        const Vec& f, int n_max = 12);
// Trace norm of the density of tau on the Fock space over the used e_k.
double tau_norm(const MultiIndex& mp, const MultiIndex& mm);
double tau_norm_bound(const MultiIndex& mp, const MultiIndex& mm);  // 4^|mu| sqrt(mu!)

cd tau_tensor_formula(const ModeBasis& basis, const TSpectrum& spec, const MultiIndexBundle& mu,
                      const std::vector<Vec>& fs);
Measured tau_tensor_bruteforce(const ModeBasis& basis, const TSpectrum& spec, const MultiIndexBundle& mu,
                               const std::vector<Vec>& fs, int n_max = 12);
double tau_tensor_norm(const MultiIndexBundle& mu);
double tau_tensor_norm_bound(const MultiIndexBundle& mu);

// (Omega| a(u_1)...a(u_k) a*(v_1)...a*(v_k) Omega) = perm [<u_s|v_t>]; rows repeat mode k alpha_k
// times, columns beta_l times; 0 unless |alpha| == |beta|.
cd permanent(const Mat& a);
cd vacuum_element(const Mat& gram, const MultiIndex& alpha, const MultiIndex& beta);

// Gram matrices <L^s e_{k,x_i} | L^s e_{l,x_j}> per pair i<j and sign.
struct PairGrams {
    int M = 0;
    std::vector<Mat> plus, minus;
};
PairGrams pair_grams(const LocalizationFrame& frame, const TSpectrum& spec, const std::vector<double>& xs);

cd f_correlation(const PairGrams& grams, const PairBundle& a, const PairBundle& b);
// First and second line of the F majorant.
struct FBound {
    double per_pair = 0.0;
    double merged = 0.0;
};
FBound f_bound(const TSpectrum& spec, const PairBundle& a, const PairBundle& b, double g);

// Operators and data shared by the S functionals at fixed x.
struct SContext {
    const EnergyWindow* window = nullptr;
    const LocalizationFrame* frame = nullptr;
    const TSpectrum* spec = nullptr;
    std::vector<double> xs;
    PairGrams grams;
    // annihilators a(L^s e_{k,x_i}) on the window, index [slot][k]
    std::vector<std::vector<Mat>> a_plus, a_minus;
};
SContext make_s_context(const EnergyWindow& window, const LocalizationFrame& frame, const TSpectrum& spec,
                        const std::vector<double>& xs);

// phi(a*(Le_x)^mu a(Le_x)^nu)
cd monomial_expectation(const SContext& ctx, const MultiIndexBundle& mu, const MultiIndexBundle& nu,
                        const EnergyFunctional& phi);
cd s_functional(const SContext& ctx, const MultiIndexBundle& mu, const MultiIndexBundle& nu, const PairBundle& a,
                const PairBundle& b, const EnergyFunctional& phi);
// ME = E/m
double mu_bound(const TSpectrum& spec, const MultiIndexBundle& mu, const MultiIndexBundle& nu, double ME);
double s_bound(const TSpectrum& spec, const MultiIndexBundle& mu, const MultiIndexBundle& nu, const PairBundle& a,
               const PairBundle& b, double ME, double g);

struct SeriesBound {
    double value = 0.0;
    double mu_nu = 0.0;
    double alpha_beta = 0.0;
    double ratio = 0.0;  // 4 sqrt(3 M^3) g |T|_1
    bool divergent = false;
};
SeriesBound series_bound(double trace_norm_T, int M, double ME, double g);

struct IdentityCheck {
    double residual = 0.0;
    double tail = 0.0;  // certified bound on the omitted terms
    double scale = 0.0;
    long terms = 0;
};

// Expansion of phi(:W(sum f_{j,x_j}):) over mu, nu with |mu|, |nu| <= floor(E/m).
IdentityCheck check_summunu(const SContext& ctx, const std::vector<Vec>& fs, const EnergyFunctional& phi);
// Pair expansion truncated at |alpha|+|beta| <= max_degree.
IdentityCheck check_expo11(const ModeBasis& basis, const LocalizationFrame& frame, const TSpectrum& spec,
                           const std::vector<Vec>& fs, const std::vector<double>& xs, int max_degree = 8);
// a*(f^s)^m as a multinomial in a*(L^s e) on a truncated Fock space, m = 1..m_max.
IdentityCheck check_creation1(const ModeBasis& basis, const LocalizationFrame& frame, const TSpectrum& spec,
                              const Vec& f, int sign, int m_max = 3);

}  // namespace pslab
