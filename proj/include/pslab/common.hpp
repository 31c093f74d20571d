#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pslab {

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using cd = std::complex<double>;
using Vec = VectorX<cd>;
using Mat = MatrixX<cd>;
using RVec = VectorX<double>;
using SpMat = Eigen::SparseMatrix<cd>;

inline constexpr cd I_{0.0, 1.0};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SizeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PoleError : std::domain_error {
    using std::domain_error::domain_error;
};

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TruncationRiskError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeometryError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FrameRankError : std::runtime_error {
    FrameRankError(const std::string& what, int achieved, int requested)
        : std::runtime_error(what), achieved_rank(achieved), requested_rank(requested) {}
    int achieved_rank;
    int requested_rank;
};

using Rng = std::mt19937_64;

// Independent stream per (seed, tag, index); results do not depend on call order.
Rng make_rng(std::uint64_t seed, std::uint64_t tag = 0, std::uint64_t index = 0);

double uniform(Rng& rng, double a = 0.0, double b = 1.0);
double gaussian(Rng& rng);
cd complex_gaussian(Rng& rng);

// Largest singular value. Full SVD up to 2000 columns/rows, power iteration beyond.
double op_norm(const Mat& a);
double op_norm(const SpMat& a);

double trace_norm(const Mat& a);

double factorial(int n);
double binomial(int n, int k);

// Thread cap from PSLAB_THREADS (default: hardware concurrency, at least 1).
int thread_cap();

// Runs f(i) for i in [0, n). Each index writes its own slot, so the outcome
// is independent of the thread count.
template <class F>
void parallel_for(int n, F&& f) {
    const int threads = std::min(thread_cap(), n);
    if (threads <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            for (int i = t; i < n; i += threads) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace pslab
