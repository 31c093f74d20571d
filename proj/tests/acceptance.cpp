// One PASS/FAIL line per acceptance criterion. Exit status 1 if any criterion fails.
#include "runner.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>

using namespace pslab;
using runner::json;

namespace {

int failures = 0;

void line(int id, bool pass, const std::string& text) {
    if (!pass) ++failures;
    std::printf("%s %2d  %s\n", pass ? "PASS" : "FAIL", id, text.c_str());
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

const json& find_doc(const std::vector<json>& docs, const std::string& command, const std::string& name) {
    for (const auto& d : docs)
        if (d["command"] == command && d["name"] == name) return d["result"];
    throw std::runtime_error("missing document " + command + " " + name);
}

const json& find_check(const json& body, const std::string& prefix) {
    for (const auto& c : body["checks"])
        if (c["name"].get<std::string>().rfind(prefix, 0) == 0) return c;
    throw std::runtime_error("missing check " + prefix);
}

double val(const json& c) { return c["value"]["value"].get<double>(); }
double eta(const json& c) { return c["value"]["eta"].get<double>(); }
long samples(const json& c) { return c["value"]["samples"].get<long>(); }

}  // namespace

int main() {
    runner::Config cfg;
    cfg.seed = 7;

    const auto t0 = std::chrono::steady_clock::now();
    runner::Session first(cfg);
    const std::vector<json> docs = runner::run_suite(first);
    const double suite_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // 1
    {
        const json& r = find_doc(docs, "verify", "lemma42");
        const json& c = find_check(r, "S residual / scale");
        const double secs = r["timing"]["seconds"].get<double>();
        const bool ok = val(c) <= 1e-10 && samples(c) >= 20 && secs <= 60.0;
        line(1, ok, "S = 0 (E=1.2, N=4, n_max=6): max |S|/scale = " + sci(val(c)) + " <= 1e-10 over " +
                        std::to_string(samples(c)) + " functionals, runtime " + sci(secs) + " s <= 60 s");
    }
    // 2
    {
        const json& r = find_doc(docs, "verify", "energybounds");
        bool ok = true;
        std::string vals;
        for (int n = 1; n <= 3; ++n) {
            const json& c = find_check(r, "|a(f_1)...a(f_n) P_E| / bound, n = " + std::to_string(n));
            ok = ok && val(c) <= 1.0 && samples(c) >= 50;
            vals += (n > 1 ? ", " : "") + sci(val(c));
        }
        line(2, ok, "energy bounds n=1,2,3 on 50 instances each: max ratio " + vals + " <= 1 (no tolerance)");
    }
    // 3
    {
        const json& r = find_doc(docs, "verify", "expansions");
        const json& v = find_check(r, "|<W(f)> - exp");
        const json& nw = find_check(r, "|W(f) - exp");
        const json& e = find_check(r, "truncation change eta");
        const bool ok = val(v) <= 1e-6 && val(nw) <= 1e-6 && val(e) <= 1e-6;
        line(3, ok, "Weyl calculus (|f| <= 1, n_max = 12, eta from 16): vacuum " + sci(val(v)) + ", normal order " +
                        sci(val(nw)) + " <= 1e-6, eta " + sci(val(e)));
    }
    // 4
    {
        const json& r = find_doc(docs, "verify", "taudual");
        const json& d = find_check(r, "formula vs Fock");
        const json& n = find_check(r, "norm / bound");
        const bool ok = d["pass"].get<bool>() && samples(d) >= 50 && val(n) <= 1.0;
        line(4, ok, "tau dual route on " + std::to_string(samples(d)) + " cases: max |diff| " + sci(val(d)) +
                        " <= 1e-8 + eta (eta <= " + sci(eta(d)) + "), max norm/bound " + sci(val(n)) + " <= 1");
    }
    // 5
    {
        const json& r = find_doc(docs, "verify", "claim");
        const json& b = find_check(r, "boundary");
        const json& c = find_check(r, "claim identity residual");
        const json& g0 = find_check(r, "|g(0) - delta|");
        const json& gp = find_check(r, "|g(pi) + delta|");
        const bool ok = val(b) <= 1e-9 && val(c) <= 1e-7 && samples(c) >= 20 && val(g0) <= 1e-12 && val(gp) <= 1e-12;
        line(5, ok, "conformal map: boundary " + sci(val(b)) + " <= 1e-9 (" + std::to_string(samples(b)) +
                        " points), claim residual " + sci(val(c)) + " <= 1e-7 on " + std::to_string(samples(c)) +
                        " instances, g(0) " + sci(val(g0)) + ", g(pi) " + sci(val(gp)) + " <= 1e-12");
    }
    // 6
    {
        const json& r = find_doc(docs, "verify", "expansions");
        const json& s = find_check(r, "summunu");
        const json& e = find_check(r, "expo11");
        const json& c = find_check(r, "creation1");
        const bool ok = val(s) <= 1e-8 && val(e) <= 1e-8 + eta(e) && val(c) <= 1e-8;
        line(6, ok, "expansions: summunu " + sci(val(s)) + ", expo11 " + sci(val(e)) + " (tail " + sci(eta(e)) +
                        "), creation1 " + sci(val(c)) + " <= 1e-8 + tail");
    }
    // 7
    {
        const json& r = find_doc(docs, "scan", "pinorm");
        std::vector<double> best;
        std::string vals;
        bool shared = true;
        for (const auto& row : r["rows"]) {
            best.push_back(row["estimate"]["value"].get<double>());
            shared = shared && row["samples"] == 200;
            vals += (vals.empty() ? "" : ", ") + sci(best.back());
        }
        bool mono = true;
        for (std::size_t i = 1; i < best.size(); ++i) mono = mono && best[i] <= best[i - 1];
        const double drop = best.front() / best.back();
        line(7, mono && shared && drop >= 10.0 && best.size() == 4,
             "pinorm best of 200 at delta 1,2,4,8: " + vals + "; non-increasing, drop " + sci(drop) + " >= 10");
    }
    // 8
    {
        const json& r = find_doc(docs, "scan", "epscontent");
        std::string vals;
        for (const auto& row : r["rows"]) vals += (vals.empty() ? "" : ", ") + std::to_string(row["estimate"]["value"].get<int>());
        const bool ok = r["rows"].back()["parameter"] == 8.0 && r["rows"].back()["estimate"]["value"] == 1;
        line(8, ok, "eps-content (eps = initial diameter / 10 = " + sci(r["eps"].get<double>()) +
                        ") at delta 1,2,4,8: " + vals + "; reaches 1 by delta = 8");
    }
    // 9
    {
        const json& r = find_doc(docs, "scan", "clustering");
        const double v0 = r["rows"].front()["estimate"]["value"].get<double>();
        const double v15 = r["rows"].back()["estimate"]["value"].get<double>();
        const bool ok = r["rows"].back()["parameter"] == 15.0 && v15 <= 1e-3 * v0 && r["routes_agree"].get<bool>();
        double worst = 0.0;
        for (const auto& row : r["rows"]) worst = std::max(worst, row["route_diff"].get<double>());
        line(9, ok, "clustering |w0(AB(15))| = " + sci(v15) + " <= 1e-3 x " + sci(v0) + ", route diff " + sci(worst) +
                        " <= 1e-8 + eta");
    }
    // 10
    {
        const json& r = find_doc(docs, "verify", "bounds");
        const json& c = find_check(r, "log-slope");
        const double slope = val(c), rel = std::abs(slope + cfg.model.m) / cfg.model.m;
        line(10, rel <= 0.15, "correlation log-slope over d in [5, 15]: " + sci(slope) + ", relative error " + sci(rel) +
                                  " <= 0.15");
    }
    // 11
    {
        const json& a = find_doc(docs, "scan", "averaging");
        const json& p = find_doc(docs, "scan", "ppp");
        bool dom = a["bound_dominates"].get<bool>();
        for (const auto& row : a["rows"])
            dom = dom && row["estimate"]["value"].get<double>() <= row["bound"]["value"].get<double>();
        std::vector<double> dev;
        std::string vals;
        for (const auto& row : p["rows"]) {
            dev.push_back(row["estimate"]["value"].get<double>());
            vals += (vals.empty() ? "" : ", ") + sci(dev.back());
        }
        bool dec = dev.size() == 3;
        for (std::size_t i = 1; i < dev.size(); ++i) dec = dec && dev[i] < dev[i - 1];
        line(11, dom && dec, std::string("averaging majorant dominates every measured value: ") + (dom ? "yes" : "no") +
                                 "; ppp deviation at L = 5,10,20: " + vals + " decreasing");
    }
    // 12
    {
        const char* old = std::getenv("PSLAB_THREADS");
        const std::string saved = old ? old : "";
        setenv("PSLAB_THREADS", "2", 1);
        runner::Session second(cfg);
        const std::vector<json> again = runner::run_suite(second);
        if (old) setenv("PSLAB_THREADS", saved.c_str(), 1);
        else unsetenv("PSLAB_THREADS");
        bool same = again.size() == docs.size();
        for (std::size_t i = 0; same && i < docs.size(); ++i)
            same = runner::strip_volatile(docs[i]).dump(2) == runner::strip_volatile(again[i]).dump(2);
        line(12, same && suite_seconds <= 600.0,
             std::string("determinism: second run (PSLAB_THREADS=2) byte-identical: ") + (same ? "yes" : "no") +
                 "; suite runtime " + sci(suite_seconds) + " s <= 600 s");
    }
    std::printf("%d of 12 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
