#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "helpers.hpp"
#include "lmesel/config_io.hpp"

using namespace lmesel;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "lmesel_config_tests";
    fs::create_directories(dir);
    return dir / name;
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

} // namespace

TEST_CASE("problem round trip is exact") {
    const LMEProblem prob = test::small_problem(3);
    const fs::path p = scratch("problem.json");
    save_problem(prob, p);
    const LMEProblem back = load_problem(p);
    REQUIRE(back.m() == prob.m());
    for (Index i = 0; i < prob.m(); ++i) {
        CHECK(back.group(i).X == prob.group(i).X);
        CHECK(back.group(i).Z == prob.group(i).Z);
        CHECK(back.group(i).y == prob.group(i).y);
        CHECK(back.group(i).Lambda == prob.group(i).Lambda);
    }
}

TEST_CASE("compact Lambda forms") {
    const json doc = json::parse(R"({"groups": [
        {"X": [[1.0], [2.0]], "Z": [[1.0], [0.0]], "Y": [0.5, 1.0], "Lambda": 0.5},
        {"X": [[1.0]], "Z": [[1.0]], "Y": [0.1], "Lambda": [2.0]}]})");
    const LMEProblem prob = problem_from_json(doc);
    CHECK(prob.group(0).Lambda(1, 1) == 0.5);
    CHECK(prob.group(0).Lambda(0, 1) == 0.0);
    CHECK(prob.group(1).Lambda(0, 0) == 2.0);
}

TEST_CASE("bad problem files") {
    const fs::path p = scratch("broken.json");
    write(p, "{\"groups\": [\n  {\"X\": [[1.0]],\n   \"Z\": oops}]}");
    try {
        load_problem(p);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    CHECK_THROWS_AS(problem_from_json(json::parse(R"({"groups": []})")), ValidationError);
    CHECK_THROWS_AS(problem_from_json(json::parse(
                        R"({"groups": [{"X": [[1.0]], "Z": [[1.0]], "Y": [0.1, 0.2], "Lambda": 1.0}]})")),
                    ValidationError);
    CHECK_THROWS_AS(problem_from_json(json::parse(
                        R"({"groups": [{"X": [[1.0]], "Z": [[1.0]], "Y": [0.1], "Lambda": -1.0}]})")),
                    ValidationError);
    CHECK_THROWS_AS(load_problem(scratch("does_not_exist.json")), ValidationError);
}

TEST_CASE("solver config round trip and strict keys") {
    SolverConfig cfg;
    cfg.eta = 3.5;
    cfg.mu = 1e-3;
    cfg.fixed_step = 0.2;
    cfg.backtracking.t0 = 0.5;
    cfg.gamma_max = VectorXd::Constant(2, 7.0);
    cfg.initial = ParamPoint{VectorXd::Constant(2, 0.1), VectorXd::Constant(3, 0.4)};
    const SolverConfig back = solver_config_from_json(to_json(cfg));
    CHECK(back.eta == 3.5);
    CHECK(*back.mu == 1e-3);
    CHECK(*back.fixed_step == 0.2);
    CHECK(*back.backtracking.t0 == 0.5);
    CHECK(*back.gamma_max == *cfg.gamma_max);
    CHECK(back.initial->gamma == cfg.initial->gamma);
    CHECK(to_json(back) == to_json(cfg));

    CHECK_THROWS_AS(solver_config_from_json(json::parse(R"({"etaa": 1})")), ValidationError);
    CHECK_THROWS_AS(solver_config_from_json(json::parse(R"({"eta": "big"})")), ValidationError);
    CHECK_THROWS_AS(solver_config_from_json(json::parse(R"({"eta": -2})")), ValidationError);
}

TEST_CASE("fit config") {
    const FitConfig fc = fit_config_from_json(json::parse(
        R"({"algorithm": "msr3", "regularizer": {"kind": "scad", "lambda": 0.3, "a": 4.0}, "solver": {"eta": 2}})"));
    CHECK(fc.algorithm == Algorithm::msr3);
    CHECK(fc.regularizer.kind == RegKind::scad);
    CHECK(fc.regularizer.scad_a == 4.0);
    CHECK(fc.solver.eta == 2.0);
    CHECK_THROWS_AS(fit_config_from_json(json::parse(R"({"regularizer": {"kind": "l2", "lambda": 1}})")),
                    ValidationError);
}

TEST_CASE("sim config and truth round trip") {
    SimConfig cfg = default_sim_config();
    cfg.seed = 99;
    cfg.noise_std = 0.5;
    const SimConfig back = sim_config_from_json(to_json(cfg));
    CHECK(back.seed == 99);
    CHECK(back.noise_std == 0.5);
    CHECK(back.group_sizes == cfg.group_sizes);
    CHECK(back.beta_true == cfg.beta_true);
    const SimConfig partial = sim_config_from_json(json::parse(R"({"seed": 5})"));
    CHECK(partial.seed == 5);
    CHECK(partial.p == 20);
    const GroundTruth t = truth_of(cfg);
    const GroundTruth tb = truth_from_json(to_json(t));
    CHECK(tb.beta_mask == t.beta_mask);
    CHECK(tb.gamma_mask == t.gamma_mask);
}

TEST_CASE("bench spec eta modes") {
    BenchSpec spec;
    CHECK_FALSE(spec.eta.has_value());
    CHECK(to_json(spec)["eta"] == "auto");
    const BenchSpec fixed = bench_spec_from_json(json::parse(R"({"eta": 2.5, "seeds": 3, "algorithms": ["msr3"]})"));
    CHECK(*fixed.eta == 2.5);
    CHECK(fixed.seeds == 3);
    CHECK(fixed.algorithms == std::vector<Algorithm>{Algorithm::msr3});
    CHECK_FALSE(bench_spec_from_json(json::parse(R"({"eta": "auto"})")).eta.has_value());
    CHECK_THROWS_AS(bench_spec_from_json(json::parse(R"({"seeds": 0})")), ValidationError);
    CHECK_THROWS_AS(bench_spec_from_json(json::parse(R"({"algorithms": []})")), ValidationError);
}

TEST_CASE("trace csv") {
    SolveReport rep;
    rep.trace.push_back({0, 1.5, 0.25, 0.1, 1.0, 0.0, 1.5, 0.001});
    rep.trace.push_back({1, 1.25, 0.125, 0.01, 0.5, 0.0625, 1.5, 0.002});
    const std::string csv = trace_csv(rep);
    std::istringstream in(csv);
    std::string header, row;
    std::getline(in, header);
    CHECK(header == "iter,objective,residual,mu,step,step_norm_sq,prev_objective,seconds");
    std::getline(in, row);
    std::getline(in, row);
    CHECK(row == "1,1.25,0.125,0.01,0.5,0.0625,1.5,0.002");
    CHECK(fmt_double(0.1) == "0.1");
}

TEST_CASE("bench outputs: every csv number is in the json") {
    BenchSpec spec;
    spec.seeds = 1;
    spec.algorithms = {Algorithm::msr3_fast};
    spec.regularizers = {RegKind::l1};
    spec.eta = 1.0;
    spec.lambda_grid = {0.1, 1.0};
    spec.output_dir = scratch("bench");
    const BenchResult res = run_bench(spec);
    write_bench_outputs(res, spec.output_dir);
    const json doc = read_json_file(spec.output_dir / "bench.json");
    REQUIRE(doc["trials"].size() == 1);
    const json& t = doc["trials"][0];

    std::ifstream in(spec.output_dir / "bench_trials.csv");
    std::string header, row, cell;
    std::getline(in, header);
    std::getline(in, row);
    std::vector<std::string> names, values;
    for (std::istringstream hs(header); std::getline(hs, cell, ',');) names.push_back(cell);
    for (std::istringstream rs(row); std::getline(rs, cell, ',');) values.push_back(cell);
    REQUIRE(names.size() == values.size());
    for (std::size_t k = 0; k < names.size(); ++k) {
        CAPTURE(names[k]);
        REQUIRE(t.contains(names[k]));
        const json& j = t[names[k]];
        if (j.is_number_float()) CHECK(fmt_double(j.get<double>()) == values[k]);
        else if (j.is_number()) CHECK(j.dump() == values[k]);
        else if (j.is_boolean()) CHECK((j.get<bool>() ? "true" : "false") == values[k]);
        else CHECK(j.get<std::string>() == values[k]);
    }

    std::ifstream table(spec.output_dir / "bench_table.csv");
    std::getline(table, header);
    CHECK(header == "regularizer,msr3_fast_accuracy,msr3_fast_accuracy_std,msr3_fast_seconds,msr3_fast_seconds_per_fit");
    CHECK(doc["cells"].size() == 1);

    // deterministic apart from timing
    const BenchResult again = run_bench(spec);
    CHECK(again.trials[0].accuracy.joint == res.trials[0].accuracy.joint);
    CHECK(again.trials[0].lambda == res.trials[0].lambda);
    CHECK(again.trials[0].bic == res.trials[0].bic);
}
