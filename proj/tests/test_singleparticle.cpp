#include "model.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace pslab;
using Catch::Approx;

TEST_CASE("mode basis grid") {
    const ModeBasis b = build_mode_basis(1.0, 5.0, 5);
    REQUIRE(b.n_modes == 5);
    CHECK(b.dp == 2.5);
    const double want[] = {-5.0, -2.5, 0.0, 2.5, 5.0};
    for (int k = 0; k < 5; ++k) CHECK(b.p(k) == want[k]);
    CHECK(b.omega(2) == 1.0);
    CHECK(b.omega(4) == Approx(std::sqrt(26.0)).epsilon(1e-15));
}

TEST_CASE("mode basis rejects bad parameters") {
    CHECK_THROWS_AS(build_mode_basis(0.0, 5.0, 5), ConfigError);
    CHECK_THROWS_AS(build_mode_basis(-1.0, 5.0, 5), ConfigError);
    CHECK_THROWS_AS(build_mode_basis(1.0, 5.0, 6), ConfigError);
    CHECK_THROWS_AS(build_mode_basis(1.0, 0.0, 5), ConfigError);
}

TEST_CASE("translation") {
    const ModeBasis b = build_mode_basis(1.0, 20.0, 401);
    Rng rng = make_rng(11);
    const Vec f = testmodel::random_vec(rng, b.n_modes);
    CHECK((translate(b, f, 0.0, 0.0) - f).norm() == 0.0);
    for (int i = 0; i < 5; ++i) {
        const double t = uniform(rng, -5, 5), x = uniform(rng, -5, 5);
        CHECK(norm(b, translate(b, f, t, x)) == Approx(norm(b, f)).epsilon(1e-14));
    }
    // group law against the phase e^{i(omega t - p x)} written out directly
    const double t1 = 0.7, x1 = -1.3, t2 = -0.2, x2 = 2.9;
    const Vec twice = translate(b, translate(b, f, t1, x1), t2, x2);
    Vec direct(b.n_modes);
    for (int k = 0; k < b.n_modes; ++k)
        direct(k) = std::exp(I_ * (b.omega(k) * (t1 + t2) - b.p(k) * (x1 + x2))) * f(k);
    CHECK((twice - direct).norm() <= 1e-12 * f.norm());
    CHECK((twice - translate(b, f, t1 + t2, x1 + x2)).norm() <= 1e-12 * f.norm());
}

TEST_CASE("conjugation J") {
    Rng rng = make_rng(12);
    const Vec f = testmodel::random_vec(rng, 41);
    CHECK((conjugate_J(conjugate_J(f)) - f).norm() == 0.0);
    CHECK((conjugate_J(Vec(I_ * f)) + I_ * conjugate_J(f)).norm() <= 1e-15 * f.norm());
    Vec even(41);
    for (int k = 0; k < 41; ++k) even(k) = std::exp(-0.01 * (k - 20) * (k - 20));
    CHECK((conjugate_J(even) - even).norm() == 0.0);
    const Vec fp = j_plus(f), fm = j_minus(f);
    CHECK((fp + I_ * fm - f).norm() <= 1e-14 * f.norm());
    CHECK((conjugate_J(fp) - fp).norm() <= 1e-14 * f.norm());
    CHECK((conjugate_J(fm) - fm).norm() <= 1e-14 * f.norm());
}

TEST_CASE("localization frame") {
    const ModeBasis b = build_mode_basis(1.0, 40.0, 801);
    SECTION("single test function") {
        const LocalizationFrame fr = build_localization_frame(b, 0.5, 1);
        REQUIRE(fr.plus.cols() == 1);
        REQUIRE(fr.minus.cols() == 1);
        CHECK(norm(b, fr.plus.col(0)) == Approx(1.0).epsilon(1e-12));
        CHECK(norm(b, fr.minus.col(0)) == Approx(1.0).epsilon(1e-12));
    }
    SECTION("orthonormal families") {
        const LocalizationFrame& fr = testmodel::model().frame;
        const ModeBasis& mb = testmodel::model().basis;
        for (const Mat* fam : {&fr.plus, &fr.minus})
            for (int i = 0; i < fam->cols(); ++i)
                for (int j = 0; j < fam->cols(); ++j) {
                    const cd g = inner(mb, fam->col(i), fam->col(j));
                    CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) <= 1e-10);
                }
    }
    SECTION("configuration-space leak") {
        const auto& m = testmodel::model();
        const double P = M_PI / m.basis.dp;
        const int nx = 20001;
        const RVec xs = RVec::LinSpaced(nx, -P, P);
        for (const Mat* fam : {&m.frame.plus, &m.frame.minus})
            for (int k = 0; k < fam->cols(); ++k) {
                const Vec fx = inverse_fourier(m.basis, fam->col(k), xs);
                double total = 0.0, outside = 0.0;
                for (int i = 0; i < nx; ++i) {
                    const double w = std::norm(fx(i));
                    total += w;
                    if (std::abs(xs(i)) > m.frame.r + m.frame.ell) outside += w;
                }
                CHECK(outside / total <= 0.05);
            }
    }
    SECTION("rejects bad parameters") {
        CHECK_THROWS_AS(build_localization_frame(b, 0.0, 3), ConfigError);
        CHECK_THROWS_AS(build_localization_frame(b, 0.5, 0), ConfigError);
        CHECK_THROWS_AS(build_localization_frame(b, 0.02, 12), FrameRankError);
    }
}

TEST_CASE("T spectrum") {
    const auto& m = testmodel::model();
    const TSpectrum& sp = m.spec;
    SECTION("positivity and trace norm") {
        for (int i = 0; i < sp.t_all.size(); ++i) CHECK(sp.t_all(i) >= 0.0);
        CHECK(sp.t_all.sum() == Approx(sp.trace_norm).epsilon(1e-12));
        for (int i = 1; i < sp.t.size(); ++i) CHECK(sp.t(i) <= sp.t(i - 1));
    }
    SECTION("subadditivity of the trace norm") {
        const double parts = sp.parts[0] + sp.parts[1] + sp.parts[2] + sp.parts[3];
        CHECK(sp.trace_norm <= parts * (1.0 + 1e-12));
    }
    SECTION("eigenvectors are J-invariant and orthonormal") {
        for (int i = 0; i < sp.e.cols(); ++i) {
            CHECK((conjugate_J(sp.e.col(i)) - sp.e.col(i)).norm() <= 1e-8 * sp.e.col(i).norm());
            for (int j = 0; j < sp.e.cols(); ++j)
                CHECK(std::abs(inner(m.basis, sp.e.col(i), sp.e.col(j)) - (i == j ? 1.0 : 0.0)) <= 1e-10);
        }
    }
    SECTION("T^2 agrees with the kept spectral sum") {
        Rng rng = make_rng(13);
        const Vec f = testmodel::symbol(rng, 1.0);
        const Vec t2 = T_squared_apply(m.frame, 1.2, 0.5, f);
        Vec sum = Vec::Zero(f.size());
        for (int i = 0; i < sp.e.cols(); ++i)
            sum += sp.t(i) * sp.t(i) * inner(m.basis, sp.e.col(i), f) * sp.e.col(i);
        CHECK(norm(m.basis, Vec(t2 - sum)) <= 1e-9 * sp.t(0) * sp.t(0));
    }
    SECTION("below the mass shell Q_E vanishes") {
        const TSpectrum low = build_T_spectrum(m.frame, 0.5, 0.5);
        CHECK(low.parts[0] == 0.0);
        CHECK(low.parts[1] == 0.0);
        CHECK(low.trace_norm <= (low.parts[2] + low.parts[3]) * (1.0 + 1e-12));
    }
    SECTION("parameter checks") {
        CHECK_THROWS_AS(build_T_spectrum(m.frame, 1.2, 1.0), ConfigError);
        CHECK_THROWS_AS(build_T_spectrum(m.frame, -1.0, 0.5), ConfigError);
    }
}

TEST_CASE("two-point correlation") {
    const auto& m = testmodel::model();
    SECTION("diagonal value is the squared projected norm") {
        for (int sign : {1, -1}) {
            const cd c = two_point_correlation(m.frame, m.spec, 0, 0, 0.0, 0.0, sign);
            const Vec v = projected_eigenvector(m.frame, m.spec, 0, sign);
            CHECK(std::abs(c.imag()) <= 1e-14);
            CHECK(c.real() == Approx(std::pow(norm(m.basis, v), 2)).epsilon(1e-12));
        }
    }
    SECTION("decays with separation") {
        for (int sign : {1, -1})
            for (double d : {3.0, 5.0, 7.0}) {
                const double a = std::abs(two_point_correlation(m.frame, m.spec, 0, 1, d, 0.0, sign));
                const double b = std::abs(two_point_correlation(m.frame, m.spec, 0, 1, 2 * d, 0.0, sign));
                CHECK(b < a);
            }
    }
    SECTION("log-slope of the L+ correlation over [5, 15] is close to -m") {
        RVec d(21), v(21);
        for (int i = 0; i < 21; ++i) {
            d(i) = 5.0 + 0.5 * i;
            v(i) = std::abs(two_point_correlation(m.frame, m.spec, 0, 0, d(i), 0.0, 1));
        }
        const SlopeFit fit = fit_log_slope(d, v);
        CHECK(std::abs(fit.slope + 1.0) <= 0.15);
    }
    SECTION("exponential envelope beyond d = 10") {
        const double c10 = std::abs(two_point_correlation(m.frame, m.spec, 0, 0, 10.0, 0.0, 1)) * std::exp(8.0);
        for (double d = 10.0; d <= 25.0; d += 0.5)
            CHECK(std::abs(two_point_correlation(m.frame, m.spec, 0, 0, d, 0.0, 1)) <= c10 * std::exp(-0.8 * d));
    }
    SECTION("g decreases with delta") {
        double prev = std::numeric_limits<double>::infinity();
        for (double dl : {1.0, 2.0, 4.0, 8.0}) {
            const double g = measure_g(m.frame, m.spec, dl);
            CHECK(g > 0.0);
            CHECK(g < prev);
            prev = g;
        }
    }
}
