#include "runner.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <sstream>

using namespace pslab;
using runner::json;

namespace {

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("config parsing") {
    SECTION("defaults round trip") {
        runner::Config c;
        c.seed = 7;
        const json j = runner::config_to_json(c);
        const runner::Config back = runner::config_from_json(j);
        CHECK(runner::config_to_json(back) == j);
        CHECK(back.model.n_modes == 3001);
        CHECK(back.deltas == std::vector<double>{1, 2, 4, 8});
    }
    SECTION("overrides") {
        const runner::Config c =
            runner::config_from_json(json::parse(R"({"seed": 3, "N": 5, "model": {"E": 1.5}, "deltas": [1, 3]})"));
        CHECK(*c.seed == 3);
        CHECK(c.N == 5);
        CHECK(c.model.E == 1.5);
        CHECK(c.deltas == std::vector<double>{1, 3});
    }
    SECTION("diagnostics name the field") {
        auto message = [](const char* text) {
            try {
                runner::config_from_json(json::parse(text));
            } catch (const ConfigError& e) {
                return std::string(e.what());
            }
            return std::string("no error");
        };
        CHECK_THAT(message(R"({"sede": 3})"), Catch::Matchers::ContainsSubstring("sede"));
        CHECK_THAT(message(R"({"model": {"mass": 1}})"), Catch::Matchers::ContainsSubstring("model.mass"));
        CHECK_THAT(message(R"({"N": "four"})"), Catch::Matchers::ContainsSubstring("'N'"));
        CHECK_THAT(message(R"({"deltas": [2, 1]})"), Catch::Matchers::ContainsSubstring("increasing"));
        CHECK_THAT(message(R"({"model": {"m": 0}})"), Catch::Matchers::ContainsSubstring("model.m"));
        CHECK_THAT(message(R"({"model": {"n_modes": 3000}})"), Catch::Matchers::ContainsSubstring("n_modes"));
        CHECK_THAT(message(R"({"eps_exponent": 1.0})"), Catch::Matchers::ContainsSubstring("eps_exponent"));
        CHECK_THAT(message(R"({"ns": [4, 8]})"), Catch::Matchers::ContainsSubstring("n_deltas"));
        CHECK_THAT(message("[1, 2]"), Catch::Matchers::ContainsSubstring("object"));
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(runner::load_config("/nonexistent/config.json"), ConfigError);
    }
}

TEST_CASE("seed is mandatory for sampled runs") {
    runner::Session s(runner::Config{});
    CHECK_THROWS_AS(s.seed(), ConfigError);
    CHECK_THROWS_AS(runner::run_verify("lemma42", s), ConfigError);
    CHECK_THROWS_AS(runner::run_scan("nosuchscan", s), ConfigError);
}

TEST_CASE("numbers and documents") {
    const json n = runner::number(0.5, "lower-bound", 1e-9, 200);
    CHECK(n["value"] == 0.5);
    CHECK(n["kind"] == "lower-bound");
    CHECK(n["eta"] == 1e-9);
    CHECK(n["samples"] == 200);

    runner::Config c;
    c.seed = 11;
    runner::Session s(c);
    json body;
    body["rows"] = json::array({{{"parameter", 1.0},
                                 {"estimate", runner::number(0.25, "exact")},
                                 {"bound", nullptr},
                                 {"samples", 3},
                                 {"eta", 0.0}}});
    body["timing"] = {{"seconds", 1.0}};
    const json d = runner::document("scan", "demo", s, body);
    CHECK(d["schema"] == runner::kSchema);
    CHECK(d["seed"] == 11);
    CHECK(d.contains("env"));
    CHECK(d.contains("timestamp"));
    const json st = runner::strip_volatile(d);
    CHECK_FALSE(st.contains("timestamp"));
    CHECK_FALSE(st["result"].contains("timing"));
    CHECK(st["result"]["rows"] == d["result"]["rows"]);

    const auto lines = csv_lines(runner::scan_csv(d));
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "parameter,estimate,bound,samples,eta");
    CHECK(lines[1] == "1,0.25,nan,3,0");

    const std::string md = runner::report({d});
    CHECK_THAT(md, Catch::Matchers::ContainsSubstring("## scan demo"));
    CHECK_THAT(md, Catch::Matchers::ContainsSubstring("| 1 | 0.25 | nan | 3 | 0 |"));
}

TEST_CASE("quick suites") {
    runner::Config c;
    c.seed = 7;
    runner::Session s(c);
    SECTION("energy bounds") {
        const json r = runner::run_verify("energybounds", s);
        CHECK(r["pass"].get<bool>());
        for (const auto& chk : r["checks"]) {
            CHECK(chk["value"]["kind"] == "exact");
            CHECK(chk["value"]["samples"] == 50);
        }
    }
    SECTION("clustering scan is reproducible") {
        const json a = runner::run_scan("clustering", s), b = runner::run_scan("clustering", s);
        CHECK(a.dump() == b.dump());
        CHECK(a["routes_agree"].get<bool>());
        CHECK(a["rows"].size() == c.lambdas.size());
    }
    SECTION("epsilon content collapses") {
        const json r = runner::run_scan("epscontent", s);
        CHECK(r["rows"].back()["estimate"]["value"] == 1);
    }
}
