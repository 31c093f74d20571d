#include "pslab/common.hpp"

#include <cmath>
#include <cstdlib>

namespace pslab {

Rng make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

// Hand-rolled transforms instead of std::*_distribution, whose output is
// implementation-defined; this keeps streams identical across standard libraries.
double uniform(Rng& rng, double a, double b) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return a + (b - a) * u;
}

double gaussian(Rng& rng) {
    double u1 = uniform(rng);
    while (u1 <= 0.0) u1 = uniform(rng);
    const double u2 = uniform(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

cd complex_gaussian(Rng& rng) {
    const double re = gaussian(rng);
    const double im = gaussian(rng);
    return {re / std::sqrt(2.0), im / std::sqrt(2.0)};
}

namespace {

double power_norm(const Mat& a) {
    Vec v = Vec::Ones(a.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) += 1e-3 * static_cast<double>(i % 7);
    v.normalize();
    double prev = 0.0;
    for (int it = 0; it < 100000; ++it) {
        Vec w = a.adjoint() * (a * v);
        const double lam = w.norm();
        if (lam == 0.0) return 0.0;
        v = w / lam;
        if (std::abs(lam - prev) <= 1e-10 * lam) return std::sqrt(lam);
        prev = lam;
    }
    throw NumericalError("power iteration did not converge");
}

}  // namespace

double op_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    if (std::min(a.rows(), a.cols()) <= 2000) {
        Eigen::BDCSVD<Mat> svd(a);
        return svd.singularValues()(0);
    }
    return power_norm(a);
}

double op_norm(const SpMat& a) { return op_norm(Mat(a)); }

double trace_norm(const Mat& a) {
    if (a.size() == 0) return 0.0;
    Eigen::BDCSVD<Mat> svd(a);
    return svd.singularValues().sum();
}

double factorial(int n) { return std::tgamma(static_cast<double>(n) + 1.0); }

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return std::round(r);
}

int thread_cap() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("PSLAB_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1) return cap;
    }
    return hw;
}

}  // namespace pslab
