#pragma once

#include <string>

#include <json.hpp>

#include "lmesel/bench.hpp"
#include "lmesel/selection.hpp"

namespace lmesel {

using nlohmann::json;

// Readers reject unknown keys and wrong types with ValidationError.
// Writers emit every field, so write -> read round-trips.

SolverConfig solver_config_from_json(const json& doc);
json to_json(const SolverConfig& cfg);

/// {"kind": "l1", "lambda": 0.5, "a"?: 3.7, "weights"?: [...], "fixed"?: [bool...]}
Regularizer regularizer_from_json(const json& doc);
json to_json(const Regularizer& reg);

/// Missing keys keep the default_sim_config() values.
SimConfig sim_config_from_json(const json& doc);
json to_json(const SimConfig& cfg);

json to_json(const GroundTruth& truth);
GroundTruth truth_from_json(const json& doc);

json to_json(const SolveReport& report);
/// iter,objective,residual,mu,step,step_norm_sq,prev_objective,seconds
std::string trace_csv(const SolveReport& report);

/// Config for a single fit: {"algorithm": "msr3_fast", "regularizer": {...}, "solver": {...}}.
struct FitConfig {
    Algorithm algorithm = Algorithm::msr3_fast;
    Regularizer regularizer;
    SolverConfig solver;
};
FitConfig fit_config_from_json(const json& doc);

/// Bench file: BenchSpec fields plus optional "solver" and "sim" objects.
/// "eta" may be a number or the string "auto".
BenchSpec bench_spec_from_json(const json& doc);
json to_json(const BenchSpec& spec);

json to_json(const TrialResult& trial);
json to_json(const CellSummary& cell);
json to_json(const BenchResult& result);
json to_json(const EtaSelection& sel);

/// Formats a double so that reading it back gives the same bits.
std::string fmt_double(double x);

} // namespace lmesel
