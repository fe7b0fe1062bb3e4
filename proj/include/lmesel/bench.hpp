#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lmesel/algorithms.hpp"
#include "lmesel/simulator.hpp"

namespace lmesel {

/// n log-spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int n);

struct BenchSpec {
    std::vector<Algorithm> algorithms{Algorithm::pgd, Algorithm::msr3, Algorithm::msr3_fast};
    std::vector<RegKind> regularizers{RegKind::l0, RegKind::l1, RegKind::alasso, RegKind::scad};
    int seeds = 20;
    std::uint64_t first_seed = 1;
    std::vector<double> lambda_grid = log_grid(1e-2, 1e2, 20);
    std::optional<double> eta;                   // unset means "auto": BIC over eta_grid as well
    std::vector<double> eta_grid{0.1, 1.0, 3.0, 10.0, 40.0};
    SolverConfig solver;
    SimConfig sim = default_sim_config();
    std::filesystem::path output_dir = "bench_out";
    int workers = 1;
    double max_failure_rate = 0.2;

    void validate() const;
};

struct TrialResult {
    std::uint64_t seed = 0;
    Algorithm algorithm = Algorithm::msr3_fast;
    RegKind regularizer = RegKind::l1;
    bool ok = false;
    std::string error;
    double lambda = 0.0;
    double eta = 0.0;
    double bic = 0.0;
    Accuracy accuracy;
    double seconds = 0.0;        // all solves of the sweep
    double fit_seconds = 0.0;    // the selected solve alone
    int iterations = 0;
    Termination termination = Termination::max_iter;
    int fits = 0;                // solves attempted in the sweep
    int failed_fits = 0;         // grid points that threw or diverged

    double seconds_per_fit() const { return fits > 0 ? seconds / fits : 0.0; }
};

struct CellSummary {
    Algorithm algorithm = Algorithm::msr3_fast;
    RegKind regularizer = RegKind::l1;
    int trials = 0;
    int failed = 0;
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;
    double beta_accuracy_mean = 0.0;
    double gamma_accuracy_mean = 0.0;
    double f1_mean = 0.0;
    double seconds_mean = 0.0;
    double fit_seconds_mean = 0.0;
    double seconds_per_fit_mean = 0.0;
};

struct BenchResult {
    BenchSpec spec;
    std::vector<TrialResult> trials;
    std::vector<CellSummary> cells;

    double failure_rate() const;
    const CellSummary* cell(Algorithm algo, RegKind reg) const;
};

/// Adaptive-lasso weights from an unpenalized msr3_fast fit of the problem.
VectorXd alasso_reference_weights(const LMEProblem& problem, const SolverConfig& cfg);

/// Generates the seed's problem, sweeps the lambda grid (and the eta grid in
/// auto mode) and keeps the BIC-best fit. Never throws for solver failures.
TrialResult run_trial(const BenchSpec& spec, std::uint64_t seed, Algorithm algo, RegKind reg);

/// Runs every seed x regularizer x algorithm trial on up to spec.workers threads.
BenchResult run_bench(const BenchSpec& spec);

std::vector<CellSummary> summarize(const BenchSpec& spec, const std::vector<TrialResult>& trials);

/// Writes bench.json, bench_trials.csv and bench_table.csv into dir.
void write_bench_outputs(const BenchResult& result, const std::filesystem::path& dir);

} // namespace lmesel
