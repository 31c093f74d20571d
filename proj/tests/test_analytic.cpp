#include "pslab/analytic.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

using namespace pslab;
using Catch::Approx;

TEST_CASE("damping angle") {
    double prev = M_PI;
    for (double d : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double g = make_damping(1.0, d).gamma();
        CHECK(g > 0.0);
        CHECK(g < M_PI / 2);
        CHECK(g < prev);
        prev = g;
    }
    CHECK(make_damping(2.0, 1.0).gamma() > make_damping(1.0, 1.0).gamma());
    CHECK(make_damping(1.0, 1.0).gamma() == Approx(2.0 * std::atan(std::exp(-M_PI / 2))).epsilon(1e-15));
    CHECK_THROWS_AS(make_damping(0.0, 1.0), ConfigError);
    CHECK_THROWS_AS(make_damping(1.0, -1.0), ConfigError);
}

TEST_CASE("g function") {
    for (double beta : {0.5, 1.0, 3.0})
        for (double delta : {0.5, 1.0, 2.0}) {
            const DampingParams p = make_damping(beta, delta);
            CHECK(std::abs(g_function(p, 0.0) - delta) <= 1e-12);
            CHECK(std::abs(g_function(p, M_PI) + delta) <= 1e-12);
            for (double phi : {0.1, 0.7, 1.3, 2.9}) CHECK(g_function(p, phi) == Approx(g_function(p, -phi)).epsilon(1e-13));
        }
    const DampingParams p = make_damping(1.0, 1.0);
    CHECK_THROWS_AS(g_function(p, p.gamma()), PoleError);
    CHECK_THROWS_AS(g_function(p, -p.gamma()), PoleError);
}

TEST_CASE("conformal map") {
    const DampingParams p = make_damping(1.0, 1.0);
    const double gam = p.gamma();
    CHECK(std::abs(conformal_map(p, 0.0)) == 0.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const double phi = -M_PI + (k + 0.5) * 2.0 * M_PI / 1000.0;
        bool near = false;
        for (double q : {gam, -gam, M_PI - gam, -M_PI + gam}) near = near || std::abs(phi - q) < 1e-3;
        if (near) continue;
        const cd z = conformal_map(p, std::polar(1.0, phi));
        worst = std::max(worst, std::abs(z.real() - g_function(p, phi)));
        if (phi > gam + 1e-3 && phi < M_PI - gam - 1e-3) CHECK(z.imag() == Approx(p.beta).epsilon(1e-10));
        if (std::abs(phi) < gam - 1e-3) CHECK(std::abs(z.imag()) <= 1e-10);
    }
    CHECK(worst <= 1e-10);
    CHECK_THROWS_AS(conformal_map(p, std::polar(1.0, gam)), PoleError);
    CHECK_THROWS_AS(conformal_map(p, cd(1.5, 0.0)), PreconditionError);
    // interior values lie in the strip |Im z| < beta
    for (double r : {0.3, 0.8, 0.99})
        for (double phi : {-2.0, -0.5, 0.4, 1.9}) CHECK(std::abs(conformal_map(p, std::polar(r, phi)).imag()) < p.beta);
}

TEST_CASE("Gauss-Legendre and disc mean") {
    const GaussRule g = gauss_legendre(4);
    double s6 = 0.0, s7 = 0.0;
    for (int i = 0; i < 4; ++i) {
        s6 += g.w(i) * std::pow(g.x(i), 6);
        s7 += g.w(i) * std::pow(g.x(i), 7);
    }
    CHECK(s6 == Approx(2.0 / 7.0).epsilon(1e-14));
    CHECK(std::abs(s7) <= 1e-15);
    const DampingParams p = make_damping(1.0, 1.0);
    for (double r : {0.5, 0.9}) {
        const QuadResult q = cauchy_disc_mean(p, r);
        CHECK(std::abs(q.value) <= 1e-9 + q.err);
    }
}

TEST_CASE("arc weights and smearing") {
    const DampingParams p = make_damping(1.0, 1.0);
    const ArcWeights w = arc_weights(p, 0.0);
    CHECK(std::abs(w.ring - p.gamma() / M_PI) <= 1e-12);
    CHECK(std::abs(w.inner - (M_PI - 2 * p.gamma()) / (2 * M_PI)) <= 1e-12);

    const TensorInstance t = sample_tensor_instance(3, 3, 5, 0);
    const int n = static_cast<int>(t.H.rows());
    const Smeared id = smear_operators(Mat::Identity(n, n), t.H, p);
    CHECK((id.ring - (p.gamma() / M_PI) * Mat::Identity(n, n)).norm() <= 1e-12);
    CHECK((id.inner - ((M_PI - 2 * p.gamma()) / (2 * M_PI)) * Mat::Identity(n, n)).norm() <= 1e-12);

    double prev = std::numeric_limits<double>::infinity();
    const double bn = op_norm(t.B);
    for (double d : {1.0, 2.0, 4.0, 8.0}) {
        const DampingParams q = make_damping(1.0, d);
        const double rn = op_norm(smear_operators(t.B, t.H, q).ring);
        CHECK(rn <= 2 * q.gamma() / M_PI * bn * (1.0 + 1e-12));
        CHECK(rn < prev);
        prev = rn;
    }
    CHECK(prev <= 1e-3 * bn);
    CHECK_THROWS_AS(smear_operators(t.B, t.H, p, 32), ConfigError);
}

TEST_CASE("commutator identity") {
    const DampingParams p = make_damping(1.0, 1.0);
    SECTION("A = I") {
        const TensorInstance t = sample_tensor_instance(4, 4, 5, 1);
        const int n = static_cast<int>(t.H.rows());
        const ClaimResidual r = verify_claim_identity(Mat::Identity(n, n), t.B, t.H, p, t.psi1, t.psi2);
        CHECK(r.residual <= 1e-7);
    }
    SECTION("random tensor instances") {
        for (int i = 0; i < 5; ++i) {
            const TensorInstance t = sample_tensor_instance(4, 4, 5, static_cast<std::uint64_t>(10 + i));
            // the hypothesis: A(s) = e^{isH} A e^{-isH} commutes with B
            Eigen::SelfAdjointEigenSolver<Mat> es(t.H);
            const Vec ph = (I_ * 0.37 * es.eigenvalues().cast<cd>()).array().exp();
            const Mat U = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
            const Mat As = U * t.A * U.adjoint();
            CHECK((As * t.B - t.B * As).norm() <= 1e-12 * (t.A.norm() * t.B.norm()));
            CHECK(verify_claim_identity(t.A, t.B, t.H, p, t.psi1, t.psi2).residual <= 1e-7);
        }
    }
    SECTION("stable under delta") {
        const TensorInstance t = sample_tensor_instance(4, 4, 5, 99);
        for (double d : {0.5, 1.0, 2.0})
            CHECK(verify_claim_identity(t.A, t.B, t.H, make_damping(1.0, d), t.psi1, t.psi2).residual <= 1e-7);
    }
}

TEST_CASE("damped maps") {
    Rng rng = make_rng(31);
    const int n = 8;
    RVec e(n);
    for (int i = 0; i < n; ++i) e(i) = 0.6 * i;
    const Mat H = e.cast<cd>().asDiagonal();
    Mat A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = complex_gaussian(rng);
    const double beta = 0.7;
    const Mat I = Mat::Identity(n, n);
    CHECK((xi_map(I, H, beta) - hermitian_exp(H, -2 * beta)).norm() <= 1e-14);
    CHECK((xi_map(Mat(A + I), H, beta) - xi_map(A, H, beta) - xi_map(I, H, beta)).norm() <= 1e-13);
    for (double E : {0.5, 1.5, 3.0}) {
        Mat P = Mat::Zero(n, n);
        for (int i = 0; i < n; ++i)
            if (e(i) <= E) P(i, i) = 1.0;
        const Mat d = xi_map(A, H, beta) - hermitian_exp(H, -beta) * P * A * P * hermitian_exp(H, -beta);
        CHECK(op_norm(d) <= 2 * op_norm(A) * std::exp(-beta * E));
    }
    CHECK_THROWS_AS(xi_map(A, H, 0.0), ConfigError);
}
