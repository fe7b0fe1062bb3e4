// Acceptance run: one PASS / FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include <CLI11.hpp>

#include "lmesel/config_io.hpp"
#include "lmesel/selection.hpp"
#include "lmesel/verify.hpp"

using namespace lmesel;
using json = nlohmann::json;

namespace {

struct Outcome {
    bool passed = false;
    std::string summary;
    json details;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Outcome from_suite(const verify::SuiteResult& s, double budget = std::numeric_limits<double>::infinity()) {
    Outcome o;
    const bool fast = s.seconds < budget;
    o.passed = s.passed && fast;
    char buf[96];
    if (std::isfinite(budget)) std::snprintf(buf, sizeof buf, " [%.2f s, budget %.0f s]", s.seconds, budget);
    else std::snprintf(buf, sizeof buf, " [%.2f s]", s.seconds);
    o.summary = s.summary + buf;
    o.details = s.metrics;
    return o;
}

// 15 minutes with 4 workers; fewer cores than workers stretches the wall clock.
double scaled_budget(double seconds, int workers) {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int used = std::min<int>(workers, static_cast<int>(hw));
    return seconds * static_cast<double>(workers) / static_cast<double>(std::max(used, 1));
}

Outcome table_reproduction(int seeds, int workers, const std::string& out) {
    const std::map<RegKind, double> target{
        {RegKind::l0, 0.92}, {RegKind::l1, 0.88}, {RegKind::alasso, 0.91}, {RegKind::scad, 0.92}};
    BenchSpec spec;
    spec.seeds = seeds;
    spec.workers = workers;
    spec.output_dir = std::filesystem::path(out) / "bench";
    const auto t0 = std::chrono::steady_clock::now();
    const BenchResult res = run_bench(spec);
    const double elapsed = seconds_since(t0);
    write_bench_outputs(res, spec.output_dir);

    Outcome o;
    o.passed = true;
    std::string lines;
    json cells = json::array();
    for (RegKind reg : spec.regularizers) {
        const CellSummary* fast = res.cell(Algorithm::msr3_fast, reg);
        const CellSummary* slow = res.cell(Algorithm::msr3, reg);
        const CellSummary* pgd = res.cell(Algorithm::pgd, reg);
        const double acc_gap = std::abs(fast->accuracy_mean - target.at(reg));
        const double pair_gap = std::abs(fast->accuracy_mean - slow->accuracy_mean);
        const double ratio = fast->seconds_per_fit_mean / pgd->seconds_per_fit_mean;
        const bool ok_acc = acc_gap <= 0.10, ok_pair = pair_gap <= 0.03, ok_ratio = ratio < 0.05;
        o.passed = o.passed && ok_acc && ok_pair && ok_ratio;
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "    %-7s msr3_fast %.3f (target %.2f)%s  msr3 %.3f (gap %.3f)%s  pgd %.3f  "
                      "time/fit ratio %.3f%s\n",
                      to_string(reg).c_str(), fast->accuracy_mean, target.at(reg), ok_acc ? "" : " !",
                      slow->accuracy_mean, pair_gap, ok_pair ? "" : " !", pgd->accuracy_mean, ratio,
                      ok_ratio ? "" : " !");
        lines += buf;
        cells.push_back({{"regularizer", to_string(reg)},
                         {"msr3_fast_accuracy", fast->accuracy_mean},
                         {"msr3_accuracy", slow->accuracy_mean},
                         {"pgd_accuracy", pgd->accuracy_mean},
                         {"time_ratio", ratio},
                         {"accuracy_ok", ok_acc},
                         {"pair_ok", ok_pair},
                         {"ratio_ok", ok_ratio}});
    }
    const double budget = scaled_budget(900.0, workers);
    const bool in_time = elapsed <= budget;
    o.passed = o.passed && in_time;
    char head[160];
    std::snprintf(head, sizeof head, "%d seeds, failure rate %.3f, %.0f s (budget %.0f s for %d workers)\n", seeds,
                  res.failure_rate(), elapsed, budget, workers);
    o.summary = head + lines;
    if (!o.summary.empty() && o.summary.back() == '\n') o.summary.pop_back();
    o.details = {{"cells", cells}, {"seconds", elapsed}, {"failure_rate", res.failure_rate()}};
    return o;
}

Outcome eta_robustness(int seeds, int workers) {
    const BenchSpec defaults;
    const std::vector<double> grid{0.1, 1.0, 3.0, 10.0, 40.0};
    std::vector<double> chosen(static_cast<std::size_t>(seeds), std::nan(""));
    std::vector<std::string> errors(static_cast<std::size_t>(seeds));
    const auto t0 = std::chrono::steady_clock::now();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (int s = 0; s < seeds; ++s) {
        try {
            SimConfig sim = default_sim_config();
            sim.seed = defaults.first_seed + static_cast<std::uint64_t>(s);
            const LMEProblem problem = generate(sim).first;
            // lambda is picked jointly with eta by the same criterion
            double best_bic = std::numeric_limits<double>::infinity();
            for (double lambda : defaults.lambda_grid) {
                try {
                    const EtaSelection sel = select_eta(problem, Regularizer{RegKind::l1, lambda}, grid, defaults.solver);
                    for (const auto& sc : sel.scores)
                        if (sc.eta == sel.eta_best && sc.bic < best_bic) {
                            best_bic = sc.bic;
                            chosen[static_cast<std::size_t>(s)] = sel.eta_best;
                        }
                } catch (const ConvergenceError&) {
                }
            }
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(s)] = e.what();
        }
    }
    const double elapsed = seconds_since(t0);
    int inside = 0;
    std::map<double, int> hist;
    for (double e : chosen) {
        if (std::isnan(e)) continue;
        ++hist[e];
        if (e >= 1.0 && e <= 10.0) ++inside;
    }
    const double budget = scaled_budget(600.0, workers);
    Outcome o;
    o.passed = inside >= (15 * seeds + 19) / 20 && elapsed <= budget;
    std::string h;
    for (const auto& [e, n] : hist) h += " " + fmt_double(e) + ":" + std::to_string(n);
    char buf[200];
    std::snprintf(buf, sizeof buf, "eta in [1, 10] on %d of %d seeds (need %d); chosen%s [%.0f s, budget %.0f s]",
                  inside, seeds, (15 * seeds + 19) / 20, h.c_str(), elapsed, budget);
    o.summary = buf;
    o.details = {{"chosen", chosen}, {"inside", inside}, {"seconds", elapsed}};
    return o;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int workers = 4;
    int seeds = 20;
    std::string out = "acceptance_out";
    std::vector<int> only;
    app.add_option("--workers", workers, "concurrent bench trials");
    app.add_option("--seeds", seeds, "seeds for criteria 7 and 8");
    app.add_option("--out", out, "output directory");
    app.add_option("--only", only, "run a subset of criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    if (const char* env = std::getenv("LME_SELECT_WORKERS")) workers = std::max(1, std::atoi(env));

    const std::set<int> selected(only.begin(), only.end());
    auto wanted = [&](int k) { return selected.empty() || selected.count(k) > 0; };

    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, [] { return from_suite(verify::derivative_suite(), 10.0); }},
        {2, [] { return from_suite(verify::value_gradient_suite(), 30.0); }},
        {3, [] { return from_suite(verify::spectral_suite(), 30.0); }},
        {4, [] { return from_suite(verify::prox_suite(), 10.0); }},
        {5, [] { return from_suite(verify::consistency_suite(), 60.0); }},
        {6, [] { return from_suite(verify::trace_suite()); }},
        {7, [&] { return table_reproduction(seeds, workers, out); }},
        {8, [&] { return eta_robustness(seeds, workers); }},
        {9,
         [] {
             Outcome o = from_suite(verify::group_bound_suite(true));
             const verify::SuiteResult fixed = verify::group_bound_suite(false);
             o.summary += "\n    with the 1/2 factor restored: " + fixed.summary;
             o.details["corrected"] = fixed.metrics;
             return o;
         }},
    };

    std::filesystem::create_directories(out);
    json report = json::object();
    bool all = true;
    for (const auto& [k, run] : criteria) {
        if (!wanted(k)) continue;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.passed = false;
            o.summary = std::string("threw: ") + e.what();
        }
        all = all && o.passed;
        std::printf("criterion %d: %s  %s\n", k, o.passed ? "PASS" : "FAIL", o.summary.c_str());
        std::fflush(stdout);
        report[std::to_string(k)] = {{"passed", o.passed}, {"summary", o.summary}, {"details", o.details}};
    }
    write_text_atomic(std::filesystem::path(out) / "acceptance.json", report.dump(2) + "\n");
    return all ? 0 : 1;
}
