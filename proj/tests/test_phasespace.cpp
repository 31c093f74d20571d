#include "model.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace pslab;
using Catch::Approx;

namespace {

std::vector<Slot> weyl_slots(const std::vector<Vec>& fs) {
    std::vector<Slot> s;
    for (const auto& f : fs) s.push_back(single_weyl_slot(f));
    return s;
}

}  // namespace

TEST_CASE("admissible configurations") {
    SECTION("single site") {
        AdmissibleConfig c{{3.7}, 1.0, 0.5};
        CHECK(is_admissible(c));
        CHECK(admissible_by_sampling(c));
    }
    SECTION("pair separation against the cone oracle") {
        for (double d : {1.0, 1.5, 1.9, 1.99, 2.0, 2.01, 2.5, 4.0}) {
            AdmissibleConfig c{{0.0, d}, 1.0, 0.5};
            CHECK(is_admissible(c) == (d >= 2.0));
            CHECK(admissible_by_sampling(c) == is_admissible(c));
        }
    }
    SECTION("random configurations against the cone oracle") {
        Rng rng = make_rng(51);
        for (int i = 0; i < 20; ++i) {
            AdmissibleConfig c{{uniform(rng, 0, 6), uniform(rng, 0, 6), uniform(rng, 0, 6)}, uniform(rng, 0.2, 1.5), 0.4};
            CHECK(admissible_by_sampling(c, 21, 16) == is_admissible(c));
        }
    }
    SECTION("equally spaced sites meet the bound") {
        const AdmissibleConfig c = equally_spaced(5, 1.3, 0.5, 2.0);
        CHECK(is_admissible(c));
        CHECK(c.xs[1] - c.xs[0] == Approx(2.3));
    }
    SECTION("sampling") {
        Rng rng = make_rng(52);
        for (int i = 0; i < 20; ++i) CHECK(is_admissible(sample_admissible(4, 1.0, 0.5, 12.0, rng)));
        CHECK_THROWS_AS(sample_admissible(4, 1.0, 0.5, 5.0, rng), GeometryError);
    }
}

TEST_CASE("multilinear forms") {
    const auto& m = testmodel::model();
    Rng rng = make_rng(53);
    SECTION("vacuum kills a centered single slot") {
        const Vec f = testmodel::symbol(rng, 0.9);
        const EnergyFunctional vac = vacuum_functional(m.window.dim(), m.window.E);
        for (double x : {0.0, 3.0, -7.0}) CHECK(std::abs(evaluate_form(m.window, vac, {single_weyl_slot(f)}, {x})) <= 1e-15);
    }
    SECTION("zero slots") {
        const Slot zero{};
        const EnergyFunctional phi = sample_energy_functional(m.window.dim(), m.window.E, 3, 0);
        CHECK(std::abs(evaluate_form(m.window, phi, {zero, zero}, {0.0, 2.0})) == 0.0);
    }
    SECTION("form against the partition expansion and a Fock evaluation") {
        for (int i = 0; i < 6; ++i) {
            const int N = 2 + i % 2;
            std::vector<Vec> fs;
            for (int k = 0; k < N; ++k) fs.push_back(testmodel::symbol(rng, uniform(rng, 0.3, 1.0)));
            const AdmissibleConfig cfg = equally_spaced(N, 1.0, 0.5);
            const EnergyFunctional phi = sample_energy_functional(m.window.dim(), m.window.E, 3, static_cast<std::uint64_t>(i));
            const cd form = evaluate_form(m.window, phi, weyl_slots(fs), cfg.xs);
            const Measured br = evaluate_form_bruteforce(m.window, phi, weyl_slots(fs), cfg.xs, 8);
            CHECK(std::abs(form - br.value) <= 1e-8 + br.eta);
            CHECK(std::abs(form - crucial_expansion(m.window, phi, fs, cfg.xs)) <= 1e-8 + br.eta);
            if (N == 3) CHECK(std::abs(form - pi_prime_expansion(m.window, phi, fs, cfg.xs)) <= 1e-8 + br.eta);
        }
    }
    SECTION("slot normalization") {
        const Slot s = normalized(m.basis, sample_slot(m.frame, rng));
        CHECK(slot_norm_bound(m.basis, s) == Approx(1.0).epsilon(1e-14));
        const Mat a = form_matrix(m.window, {s}, {0.0});
        CHECK(op_norm(a) <= 1.0 + 1e-12);
        const Mat h = form_matrix(m.window, {hermitian_slot(testmodel::symbol(rng, 0.8))}, {1.0});
        CHECK((h - h.adjoint()).norm() <= 1e-14);
    }
}

TEST_CASE("S vanishing") {
    const auto& m = testmodel::model();
    Rng rng = make_rng(54);
    std::vector<EnergyFunctional> phis;
    for (int j = 0; j < 5; ++j) phis.push_back(sample_energy_functional(m.window.dim(), m.window.E, 6, static_cast<std::uint64_t>(j)));
    SECTION("N = 4 > 2E/m") {
        std::vector<Vec> fs;
        for (int k = 0; k < 4; ++k) fs.push_back(testmodel::symbol(rng, uniform(rng, 0.5, 1.5)));
        const AdmissibleConfig cfg = sample_admissible(4, 1.0, 0.5, 25.0, rng);
        const SVanishing s = s_vanishing_check(m.window, fs, cfg.xs, phis);
        CHECK(s.residual <= 1e-10 * s.scale);
        CHECK(s.route_diff <= 1e-12);
        CHECK((s_product_fock(m.window, fs, cfg.xs, 6) - s_product_window(m.window, fs, cfg.xs)).norm() <= 1e-12);
    }
    SECTION("N = 2 does not vanish") {
        std::vector<Vec> fs{testmodel::symbol(rng, 1.0), testmodel::symbol(rng, 1.0)};
        CHECK_THROWS_AS(s_vanishing_check(m.window, fs, {0.0, 2.0}, phis), PreconditionError);
        const Mat q = s_product_window(m.window, fs, {0.0, 2.0});
        CHECK(q.norm() > 1e-3);
        CHECK((q - s_product_fock(m.window, fs, {0.0, 2.0}, 6)).norm() <= 1e-12);
    }
    SECTION("zero symbol") {
        const EnergyWindow low = build_energy_window(m.basis, 0.4);
        const std::vector<EnergyFunctional> vac{vacuum_functional(low.dim(), low.E)};
        const SVanishing s = s_vanishing_check(low, {Vec::Zero(m.basis.n_modes)}, {0.0}, vac);
        CHECK(s.residual == 0.0);
    }
}

TEST_CASE("norm scan") {
    const auto& m = testmodel::model();
    SECTION("a single slot responds") {
        CHECK(pi_norm_estimate(m.window, m.frame, 1, 1.0, 10, 5).best > 0.0);
    }
    SECTION("below the mass gap a centered single slot gives 0") {
        const EnergyWindow low = build_energy_window(m.basis, 0.5);
        CHECK(low.dim() == 1);
        CHECK(pi_norm_estimate(low, m.frame, 1, 1.0, 10, 5).best <= 1e-15);
    }
    SECTION("shared samples do not depend on delta") {
        const PiNormSample s = sample_pinorm_family(m.frame, 4, 5, 3), t = sample_pinorm_family(m.frame, 4, 5, 3);
        REQUIRE(s.slots.size() == 4);
        CHECK(s.jitter == t.jitter);
        const auto x1 = pinorm_sites(s, 1.0, 0.5), x8 = pinorm_sites(s, 8.0, 0.5);
        for (std::size_t i = 1; i < x1.size(); ++i) CHECK((x8[i] - x8[i - 1]) - (x1[i] - x1[i - 1]) == Approx(7.0));
        CHECK(is_admissible({x1, 1.0, 0.5}));
    }
    SECTION("best value is non-increasing in delta") {
        double prev = std::numeric_limits<double>::infinity();
        for (double d : {1.0, 2.0, 4.0}) {
            const PiNormEntry e = pi_norm_estimate(m.window, m.frame, 4, d, 40, 5);
            CHECK(e.best <= prev);
            CHECK(e.best_phi <= e.best * (1.0 + 1e-12));
            prev = e.best;
        }
    }
}

TEST_CASE("epsilon content") {
    auto line = [](std::vector<double> pts) {
        return [pts](int i, int j) { return std::abs(pts[static_cast<std::size_t>(i)] - pts[static_cast<std::size_t>(j)]); };
    };
    CHECK(epsilon_content(1, line({0.0}), 0.1) == 1);
    CHECK(epsilon_content(2, line({0.0, 0.2}), 0.1) == 2);
    CHECK(epsilon_content(2, line({0.0, 0.1}), 0.1) == 1);
    CHECK(epsilon_content(4, line({0.0, 0.3, 0.6, 0.9}), 0.25) == 4);
    Rng rng = make_rng(55);
    for (int i = 0; i < 30; ++i) {
        Mat pts(6, 3);
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 3; ++c) pts(r, c) = complex_gaussian(rng);
        const double eps = uniform(rng, 0.5, 6.0);
        CHECK((epsilon_content(pts, eps) == 1) == (diameter(pts) <= eps));
    }
}

TEST_CASE("averaging") {
    const auto& m = testmodel::model();
    Rng rng = make_rng(56);
    const Slot A = normalized(m.basis, hermitian_slot(testmodel::symbol(rng, 0.8)));
    SECTION("zero observable") {
        const AveragingEntry e = averaging_experiment(m.window, Slot{}, 4, 1.0, 0.5, 2, 4, 5);
        CHECK(e.measured == 0.0);
        CHECK(e.measured <= e.bound);
    }
    SECTION("vacuum average is zero") {
        const EnergyFunctional vac = vacuum_functional(m.window.dim(), m.window.E);
        const AdmissibleConfig cfg = equally_spaced(6, 1.0, 0.5);
        cd sum = 0.0;
        for (double x : cfg.xs) sum += evaluate_form(m.window, vac, {A}, {x});
        CHECK(std::abs(sum) <= 1e-15);
    }
    SECTION("majorant dominates") {
        double prev = std::numeric_limits<double>::infinity();
        const int ns[] = {4, 8, 16};
        const double ds[] = {1.0, 1.5, 2.0};
        for (int i = 0; i < 3; ++i) {
            const AveragingEntry e = averaging_experiment(m.window, A, ns[i], ds[i], 0.5, 2, 8, 5);
            CHECK(e.measured <= e.exact_sup * (1.0 + 1e-12));
            CHECK(e.exact_sup <= e.bound);
            CHECK(e.remainder == Approx(1.0 / ns[i]).epsilon(1e-14));  // (n^2 - n(n-1)) / n^2 with |A| = 1
            CHECK(e.exact_sup < prev);
            prev = e.exact_sup;
        }
    }
    SECTION("parameter checks") {
        CHECK_THROWS_AS(averaging_experiment(m.window, A, 4, 1.0, 0.5, 3, 4, 5), ConfigError);
        CHECK_THROWS_AS(averaging_experiment(m.window, A, 40, 1.0, 0.5, 2, 4, 5), GeometryError);
    }
}

TEST_CASE("clustering") {
    const auto& m = testmodel::model();
    Rng rng = make_rng(57);
    const Vec f = testmodel::symbol(rng, 0.9);
    const double n2 = 0.81;
    CHECK(std::abs(clustering_closed_form(m.basis, f, f, 0.0) - std::exp(-n2) * (std::exp(-n2) - 1.0)) <= 1e-14);
    const Vec g = testmodel::symbol(rng, 0.7);
    const auto rows = clustering_experiment(m.basis, f, g, {0.0, 1.0, 5.0, 15.0}, 12);
    for (const auto& r : rows) CHECK(std::abs(r.closed - r.trace.value) <= 1e-8 + r.trace.eta);
    CHECK(std::abs(rows.back().closed) <= 1e-3 * std::abs(rows.front().closed));
}

TEST_CASE("space-time averages") {
    const auto& m = testmodel::model();
    CHECK(ppp_average([](double, double) { return 1.0; }, 5.0, 0.5) == Approx(1.0).epsilon(1e-14));
    CHECK(ppp_average([](double, double) { return 0.0; }, 5.0, 0.5) == 0.0);
    // bilinear integrand: the trapezoid rule is exact
    CHECK(ppp_average([](double t, double x) { return 1.0 + t * x + t; }, 4.0, 0.5) == Approx(1.0).epsilon(1e-13));
    CHECK_THROWS_AS(ppp_average([](double, double) { return 1.0; }, 5.0, 1.0), ConfigError);

    Rng rng = make_rng(58);
    const Vec f = testmodel::symbol(rng, 0.8);
    Vec h = testmodel::symbol(rng, 1.0);
    for (double x : {0.0, 1.5, 6.0}) {
        const Measured fock = one_particle_expectation_fock(m.basis, f, h, 0.5, x, 12);
        CHECK(std::abs(fock.value.real() - one_particle_expectation(m.basis, f, h, 0.5, x)) <= 1e-10 + fock.eta);
    }
    const auto rows = ppp_averaging(m.basis, f, h, {5.0, 10.0, 20.0});
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].deviation < rows[i - 1].deviation);
}

TEST_CASE("sharp energy-momentum") {
    const auto& m = testmodel::model();
    Rng rng = make_rng(59);
    const Vec f = testmodel::symbol(rng, 0.8);
    const auto at0 = sharp_momentum_experiment(m.basis, 0.0, 0.0, {0.5}, f);
    REQUIRE(at0.size() == 1);
    CHECK(at0[0].vacuum_only);
    CHECK(at0[0].sup == 0.0);
    const auto shell = sharp_momentum_experiment(m.basis, std::sqrt(2.0), 1.0, {0.25, 0.5, 1.0}, f);
    for (std::size_t i = 1; i < shell.size(); ++i) {
        CHECK(shell[i].dim >= shell[i - 1].dim);
        CHECK(shell[i].sup >= shell[i - 1].sup);
    }
}
