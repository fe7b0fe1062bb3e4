// lmesel: simulate, fit, bench, select-eta, verify

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "lmesel/config_io.hpp"
#include "lmesel/selection.hpp"
#include "lmesel/verify.hpp"

namespace fs = std::filesystem;
using namespace lmesel;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kValidation = 2;
constexpr int kConvergence = 3;
constexpr int kBenchFailures = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out = ".";
    std::optional<int> seeds;
    bool full = false;

    std::string problem;
    std::string algorithm;
    std::string reg_kind;
    std::optional<double> lambda;
    std::optional<double> eta;
    std::vector<double> eta_grid{0.1, 1.0, 3.0, 10.0, 40.0};
    std::string fault;
};

int resolve_workers(const Options& o, int fallback) {
    int workers = o.workers.value_or(fallback);
    if (const char* env = std::getenv("LME_SELECT_WORKERS")) {
        try {
            std::size_t used = 0;
            workers = std::stoi(env, &used);
            if (used != std::string(env).size()) throw std::invalid_argument(env);
        } catch (const std::exception&) {
            throw UsageError(std::string("LME_SELECT_WORKERS must be an integer, got \"") + env + "\"");
        }
    }
    if (workers < 1) throw UsageError("worker count must be >= 1");
    return workers;
}

int cmd_simulate(const Options& o) {
    SimConfig base = o.config.empty() ? default_sim_config() : sim_config_from_json(read_json_file(o.config));
    if (o.seed) base.seed = *o.seed;
    const int count = o.seeds.value_or(1);
    if (count < 1) throw UsageError("--seeds must be >= 1");
    fs::create_directories(o.out);
    for (int k = 0; k < count; ++k) {
        SimConfig cfg = base;
        cfg.seed = base.seed + static_cast<std::uint64_t>(k);
        const auto [problem, truth] = generate(cfg);
        const std::string tag = "seed" + std::to_string(cfg.seed);
        save_problem(problem, fs::path(o.out) / ("problem_" + tag + ".json"));
        write_text_atomic(fs::path(o.out) / ("truth_" + tag + ".json"), to_json(truth).dump() + "\n");
    }
    std::cout << "wrote " << count << " problem(s) to " << o.out << "\n";
    return kOk;
}

FitConfig load_fit_config(const Options& o) {
    FitConfig fc;
    if (!o.config.empty()) fc = fit_config_from_json(read_json_file(o.config));
    else if (o.reg_kind.empty() || !o.lambda) throw UsageError("fit needs --config or both --reg and --lambda");
    if (!o.algorithm.empty()) fc.algorithm = parse_algorithm(o.algorithm);
    if (!o.reg_kind.empty()) fc.regularizer.kind = parse_reg_kind(o.reg_kind);
    if (o.lambda) fc.regularizer.lambda = *o.lambda;
    if (o.eta) fc.solver.eta = *o.eta;
    fc.solver.validate();
    return fc;
}

int cmd_fit(const Options& o) {
    const LMEProblem problem = load_problem(o.problem);
    const FitConfig fc = load_fit_config(o);
    const SolveReport rep = run_algorithm(fc.algorithm, problem, fc.regularizer, fc.solver);
    fs::create_directories(o.out);
    json doc = to_json(rep);
    doc["bic"] = bic(problem, rep);
    doc["regularizer"] = to_json(fc.regularizer);
    doc["solver"] = to_json(fc.solver);
    write_text_atomic(fs::path(o.out) / "report.json", doc.dump(2) + "\n");
    write_text_atomic(fs::path(o.out) / "trace.csv", trace_csv(rep));
    std::cout << rep.algorithm << ": " << to_string(rep.termination) << " after " << rep.iterations
              << " iterations, objective " << rep.final_objective << ", " << rep.seconds << " s\n";
    return rep.termination == Termination::converged ? kOk : kConvergence;
}

int cmd_select_eta(const Options& o) {
    const LMEProblem problem = load_problem(o.problem);
    const FitConfig fc = load_fit_config(o);
    const EtaSelection sel = select_eta(problem, fc.regularizer, o.eta_grid, fc.solver);
    fs::create_directories(o.out);
    write_text_atomic(fs::path(o.out) / "select_eta.json", to_json(sel).dump(2) + "\n");
    for (const auto& s : sel.scores)
        std::cout << "eta " << s.eta << ": " << (s.ok ? "bic " + fmt_double(s.bic) : "failed (" + s.error + ")")
                  << "\n";
    std::cout << "best eta " << sel.eta_best << "\n";
    return kOk;
}

void print_table(const BenchResult& res) {
    std::printf("%-12s %-10s %9s %8s %13s %12s %7s\n", "regularizer", "algorithm", "accuracy", "std", "sweep_seconds",
                "per_fit", "failed");
    for (const auto& c : res.cells)
        std::printf("%-12s %-10s %9.3f %8.3f %13.3f %12.4f %4d/%d\n", to_string(c.regularizer).c_str(),
                    to_string(c.algorithm).c_str(), c.accuracy_mean, c.accuracy_std, c.seconds_mean,
                    c.seconds_per_fit_mean, c.failed, c.trials);
}

int cmd_bench(const Options& o) {
    BenchSpec spec = o.config.empty() ? BenchSpec{} : bench_spec_from_json(read_json_file(o.config));
    if (o.full) spec.seeds = 100;
    if (o.seeds) spec.seeds = *o.seeds;
    if (o.seed) spec.first_seed = *o.seed;
    if (o.out != ".") spec.output_dir = o.out;
    spec.workers = resolve_workers(o, spec.workers);
    spec.validate();
    const BenchResult res = run_bench(spec);
    write_bench_outputs(res, spec.output_dir);
    print_table(res);
    std::cout << "results in " << spec.output_dir.string() << "\n";
    if (res.failure_rate() > spec.max_failure_rate) {
        std::cerr << "error: " << res.failure_rate() * 100.0 << "% of trials failed (limit "
                  << spec.max_failure_rate * 100.0 << "%)\n";
        return kBenchFailures;
    }
    return kOk;
}

int cmd_verify(const Options& o) {
    verify::Faults faults;
    if (o.fault == "gradient") faults.corrupt_gradient = true;
    else if (!o.fault.empty()) throw UsageError("unknown fault \"" + o.fault + "\"");
    const verify::Report rep = verify::run(o.full, faults);
    for (const auto& s : rep.suites)
        std::cout << (s.passed ? "PASS " : "FAIL ") << s.name << ": " << s.summary << "\n";
    if (o.out != ".") {
        fs::create_directories(o.out);
        write_text_atomic(fs::path(o.out) / "verify.json", rep.to_json().dump(2) + "\n");
    }
    return rep.passed() ? kOk : kValidation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse feature selection for linear mixed-effects models"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "JSON config file");
        sub->add_option("--out", o.out, "output directory");
    };

    auto* simulate = app.add_subcommand("simulate", "generate synthetic problems and truth files");
    common(simulate);
    simulate->add_option("--seed", o.seed, "first seed");
    simulate->add_option("--seeds", o.seeds, "number of consecutive seeds");

    auto* fit = app.add_subcommand("fit", "fit one problem file");
    common(fit);
    fit->add_option("problem", o.problem, "problem JSON")->required();
    fit->add_option("--algorithm", o.algorithm, "pgd, pgd_value, msr3 or msr3_fast");
    fit->add_option("--reg", o.reg_kind, "l0, l1, alasso or scad");
    fit->add_option("--lambda", o.lambda, "penalty strength");
    fit->add_option("--eta", o.eta, "coupling weight");

    auto* bench = app.add_subcommand("bench", "run the accuracy / timing comparison");
    common(bench);
    bench->add_option("--seed", o.seed, "first seed");
    bench->add_option("--seeds", o.seeds, "number of seeds");
    bench->add_option("--workers", o.workers, "concurrent trials (LME_SELECT_WORKERS overrides)");
    bench->add_flag("--full", o.full, "100 seeds");

    auto* sel = app.add_subcommand("select-eta", "choose eta by BIC");
    common(sel);
    sel->add_option("problem", o.problem, "problem JSON")->required();
    sel->add_option("--reg", o.reg_kind, "l0, l1, alasso or scad");
    sel->add_option("--lambda", o.lambda, "penalty strength");
    sel->add_option("--grid", o.eta_grid, "eta values")->delimiter(',');
    sel->add_option("--workers", o.workers, "accepted for symmetry; grid points run in order");

    auto* ver = app.add_subcommand("verify", "run the numerical self-checks");
    ver->add_option("--out", o.out, "directory for verify.json");
    ver->add_flag("--full", o.full, "include the consistency and trace suites");
    ver->add_option("--inject-fault", o.fault, "test hook: corrupt a checked quantity (gradient)")->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(o);
        if (fit->parsed()) return cmd_fit(o);
        if (bench->parsed()) return cmd_bench(o);
        if (sel->parsed()) return cmd_select_eta(o);
        if (ver->parsed()) return cmd_verify(o);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kValidation;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return kConvergence;
    } catch (const StepFailure& e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return kConvergence;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kConvergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    }
    return kUsage;
}
