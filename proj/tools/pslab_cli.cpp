#include "runner.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace pslab;
using runner::json;

namespace {

struct Options {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<double> E, beta, delta;
    std::optional<int> N, samples;
    std::vector<double> deltas;
    bool quiet = false;
};

void add_common(CLI::App* app, Options& o) {
    app->add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--out", o.out, "output directory (default: config out_dir)");
    app->add_option("--seed", o.seed, "RNG seed");
    app->add_option("--E", o.E, "energy bound E");
    app->add_option("--N", o.N, "number of sites");
    app->add_flag("--quiet", o.quiet, "do not echo the JSON document");
}

runner::Config make_config(const Options& o) {
    runner::Config c = o.config_path.empty() ? runner::Config{} : runner::load_config(o.config_path);
    if (o.seed) c.seed = o.seed;
    if (o.E) c.model.E = *o.E;
    if (o.N) c.N = *o.N;
    if (o.beta) c.beta = *o.beta;
    if (o.delta) c.delta = *o.delta;
    if (o.samples) c.samples = *o.samples;
    if (!o.deltas.empty()) c.deltas = o.deltas;
    if (!o.out.empty()) c.out_dir = o.out;
    runner::validate(c);
    return c;
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << text;
}

fs::path stem(const runner::Config& c, const std::string& command, const std::string& name) {
    return fs::path(c.out_dir) / (command + "_" + name);
}

void emit(const runner::Config& c, const json& doc, bool quiet) {
    const std::string command = doc["command"], name = doc["name"];
    const fs::path base = stem(c, command, name);
    write_file(base.string() + ".json", doc.dump(2) + "\n");
    if (command == "scan") write_file(base.string() + ".csv", runner::scan_csv(doc));
    if (!quiet) std::cout << doc.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pslab: phase-space and energy-bound experiments for a free scalar field in 1+1 dimensions"};
    app.require_subcommand(1);

    Options vo, so, ro;
    std::string verify_name, scan_name, from_dir;

    auto* verify = app.add_subcommand("verify", "run an identity or bound check");
    verify->add_option("name", verify_name, "suite")->required()->check(CLI::IsMember(runner::kVerifyNames));
    add_common(verify, vo);
    verify->add_option("--beta", vo.beta, "damping beta");
    verify->add_option("--delta", vo.delta, "damping delta");

    auto* scan = app.add_subcommand("scan", "run a parameter scan");
    scan->add_option("name", scan_name, "scan")->required()->check(CLI::IsMember(runner::kScanNames));
    add_common(scan, so);
    scan->add_option("--deltas", so.deltas, "time windows")->delimiter(',');
    scan->add_option("--samples", so.samples, "samples per parameter");

    auto* rep = app.add_subcommand("report", "run every suite and scan and write a markdown summary");
    add_common(rep, ro);
    rep->add_option("--from", from_dir, "summarize existing JSON documents in this directory instead")
        ->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*verify) {
            const runner::Config c = make_config(vo);
            runner::Session s(c);
            const json doc = runner::document("verify", verify_name, s, runner::run_verify(verify_name, s));
            emit(c, doc, vo.quiet);
            return doc["result"]["pass"].get<bool>() ? 0 : 2;
        }
        if (*scan) {
            const runner::Config c = make_config(so);
            runner::Session s(c);
            emit(c, runner::document("scan", scan_name, s, runner::run_scan(scan_name, s)), so.quiet);
            return 0;
        }
        std::vector<json> docs;
        runner::Config c = make_config(ro);
        if (!from_dir.empty()) {
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(from_dir))
                if (e.path().extension() == ".json") files.push_back(e.path());
            std::sort(files.begin(), files.end());
            for (const auto& f : files) {
                std::ifstream in(f);
                json d = json::parse(in);
                if (d.value("schema", 0) == runner::kSchema && d.contains("result")) docs.push_back(std::move(d));
            }
        } else {
            runner::Session s(c);
            docs = runner::run_suite(s);
            for (const auto& d : docs) emit(c, d, true);
        }
        const std::string md = runner::report(docs);
        write_file(fs::path(c.out_dir) / "report.md", md);
        if (!ro.quiet) std::cout << md;
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
