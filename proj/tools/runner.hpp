#pragma once

#include "pslab/analytic.hpp"
#include "pslab/fock.hpp"
#include "pslab/multiindex.hpp"
#include "pslab/phasespace.hpp"
#include "pslab/singleparticle.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <string>

namespace pslab::runner {

using json = nlohmann::ordered_json;

inline constexpr int kSchema = 1;

struct ModelParams {
    double m = 1.0;
    double p_max = 150.0;
    int n_modes = 3001;
    double fock_p_max = 6.0;  // coarse grid for full-grid Fock checks
    int fock_n_modes = 25;
    int n_max = 6;
    double r = 0.5;
    int n_test = 3;
    double E = 1.2;
    double kappa = 0.5;
};

struct Config {
    ModelParams model;
    std::optional<std::uint64_t> seed;
    int samples = 200;
    int N = 4;
    std::vector<double> deltas{1.0, 2.0, 4.0, 8.0};
    std::vector<double> lambdas{0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0};
    std::vector<double> Ls{5.0, 10.0, 20.0};
    std::vector<int> ns{4, 8, 16};
    std::vector<double> n_deltas{1.0, 1.5, 2.0};
    std::vector<double> radii{0.25, 0.5, 1.0};
    double beta = 1.0;
    double delta = 1.0;
    int quadrature_n = 512;
    double eps_exponent = 0.5;
    int image_points = 12;
    int slot_sets = 8;
    bool measure_eta = true;
    std::string out_dir = "results";
};

// Reads a JSON config. Unknown keys and bad values throw ConfigError naming the field.
Config load_config(const std::string& path);
Config config_from_json(const json& j);
json config_to_json(const Config& c);
void validate(const Config& c);

// Model objects shared by every command of one run.
class Session {
public:
    explicit Session(Config cfg);

    const Config& config() const { return cfg_; }
    std::uint64_t seed() const;
    const ModeBasis& basis();
    const LocalizationFrame& frame();
    const TSpectrum& spectrum();
    const EnergyWindow& window();
    const ModeBasis& coarse_basis();

private:
    Config cfg_;
    std::unique_ptr<ModeBasis> basis_, coarse_;
    std::unique_ptr<LocalizationFrame> frame_;
    std::unique_ptr<TSpectrum> spec_;
    std::unique_ptr<EnergyWindow> window_;
};

// {value, kind, eta, samples}
json number(double value, const std::string& kind, double eta = 0.0, long samples = 1);

inline const std::vector<std::string> kVerifyNames{"lemma42", "claim", "taudual", "energybounds", "expansions", "bounds"};
inline const std::vector<std::string> kScanNames{"pinorm", "epscontent", "clustering", "averaging", "ppp", "sharp"};

// Body of one verification suite: {"checks": [...], "pass": bool}.
json run_verify(const std::string& name, Session& s);
// Body of one scan: {"parameter": ..., "rows": [...], ...}.
json run_scan(const std::string& name, Session& s);

// Full result document with schema, environment stamp, seed and timestamp.
json document(const std::string& command, const std::string& name, const Session& s, json body);
json env_stamp();
// Copy without the run-dependent timestamp and timing fields.
json strip_volatile(json doc);

// CSV with columns parameter, estimate, bound, samples, eta.
std::string scan_csv(const json& scan_doc);

// Markdown summary of a set of result documents.
std::string report(const std::vector<json>& docs);

// Every verify and scan in a fixed order.
std::vector<json> run_suite(Session& s);

}  // namespace pslab::runner
