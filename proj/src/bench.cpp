#include "lmesel/bench.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "lmesel/config_io.hpp"
#include "lmesel/selection.hpp"

namespace lmesel {

std::vector<double> log_grid(double lo, double hi, int n) {
    if (!(lo > 0.0) || !(hi >= lo) || n < 1) throw ValidationError("log_grid needs 0 < lo <= hi and n >= 1");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double t = n == 1 ? 0.0 : static_cast<double>(k) / (n - 1);
        g[static_cast<std::size_t>(k)] = std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
    }
    return g;
}

void BenchSpec::validate() const {
    if (algorithms.empty()) throw ValidationError("bench needs at least one algorithm");
    if (regularizers.empty()) throw ValidationError("bench needs at least one regularizer");
    if (seeds < 1) throw ValidationError("seeds must be >= 1");
    if (lambda_grid.empty()) throw ValidationError("lambda grid is empty");
    for (double l : lambda_grid)
        if (!(l > 0.0)) throw ValidationError("lambda grid values must be positive");
    if (eta && !(*eta > 0.0)) throw ValidationError("eta must be positive");
    if (!eta) {
        if (eta_grid.empty()) throw ValidationError("eta grid is empty");
        for (double e : eta_grid)
            if (!(e > 0.0)) throw ValidationError("eta grid values must be positive");
    }
    if (workers < 1) throw ValidationError("workers must be >= 1");
    if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0)) throw ValidationError("max_failure_rate must lie in [0, 1]");
    solver.validate();
    sim.validate();
}

double BenchResult::failure_rate() const {
    if (trials.empty()) return 0.0;
    std::size_t failed = 0;
    for (const auto& t : trials) failed += !t.ok;
    return static_cast<double>(failed) / static_cast<double>(trials.size());
}

const CellSummary* BenchResult::cell(Algorithm algo, RegKind reg) const {
    for (const auto& c : cells)
        if (c.algorithm == algo && c.regularizer == reg) return &c;
    return nullptr;
}

VectorXd alasso_reference_weights(const LMEProblem& problem, const SolverConfig& cfg) {
    const Regularizer none{RegKind::l1, 0.0, {}, 3.7, {}};
    const SolveReport rep = msr3_fast(problem, none, cfg);
    return alasso_weights(rep.sparse_point().stacked());
}

TrialResult run_trial(const BenchSpec& spec, std::uint64_t seed, Algorithm algo, RegKind kind) {
    TrialResult t;
    t.seed = seed;
    t.algorithm = algo;
    t.regularizer = kind;
    try {
        SimConfig sim = spec.sim;
        sim.seed = seed;
        const auto [problem, truth] = generate(sim);
        Regularizer reg;
        reg.kind = kind;
        if (kind == RegKind::alasso) reg.weights = alasso_reference_weights(problem, spec.solver);

        std::vector<double> etas = spec.eta ? std::vector<double>{*spec.eta} : spec.eta_grid;
        if (algo == Algorithm::pgd) etas.resize(1);  // eta plays no role
        double best = std::numeric_limits<double>::infinity();
        SolveReport chosen;
        for (double eta : etas) {
            for (double lambda : spec.lambda_grid) {
                SolverConfig cfg = spec.solver;
                cfg.eta = eta;
                reg.lambda = lambda;
                try {
                    SolveReport rep = run_algorithm(algo, problem, reg, cfg);
                    t.seconds += rep.seconds;
                    ++t.fits;
                    if (rep.termination == Termination::gamma_max_exceeded) {
                        ++t.failed_fits;
                        continue;
                    }
                    const double score = bic(problem, rep);
                    if (score < best) {
                        best = score;
                        t.lambda = lambda;
                        t.eta = eta;
                        chosen = std::move(rep);
                    }
                } catch (const Error&) {
                    ++t.fits;
                    ++t.failed_fits;
                }
            }
        }
        if (!std::isfinite(best)) {
            t.error = "every grid point failed";
            return t;
        }
        t.ok = true;
        t.bic = best;
        t.accuracy = accuracy_detail(chosen.beta_mask, chosen.gamma_mask, truth);
        t.fit_seconds = chosen.seconds;
        t.iterations = chosen.iterations;
        t.termination = chosen.termination;
    } catch (const std::exception& e) {
        t.ok = false;
        t.error = e.what();
    }
    return t;
}

std::vector<CellSummary> summarize(const BenchSpec& spec, const std::vector<TrialResult>& trials) {
    std::vector<CellSummary> cells;
    for (RegKind reg : spec.regularizers) {
        for (Algorithm algo : spec.algorithms) {
            CellSummary c;
            c.algorithm = algo;
            c.regularizer = reg;
            std::vector<double> acc;
            for (const auto& t : trials) {
                if (t.algorithm != algo || t.regularizer != reg) continue;
                ++c.trials;
                if (!t.ok) {
                    ++c.failed;
                    continue;
                }
                acc.push_back(t.accuracy.joint);
                c.beta_accuracy_mean += t.accuracy.beta;
                c.gamma_accuracy_mean += t.accuracy.gamma;
                c.f1_mean += t.accuracy.f1;
                c.seconds_mean += t.seconds;
                c.fit_seconds_mean += t.fit_seconds;
                c.seconds_per_fit_mean += t.seconds_per_fit();
            }
            const auto k = static_cast<double>(acc.size());
            if (k > 0) {
                for (double a : acc) c.accuracy_mean += a;
                c.accuracy_mean /= k;
                c.beta_accuracy_mean /= k;
                c.gamma_accuracy_mean /= k;
                c.f1_mean /= k;
                c.seconds_mean /= k;
                c.fit_seconds_mean /= k;
                c.seconds_per_fit_mean /= k;
                double ss = 0.0;
                for (double a : acc) ss += (a - c.accuracy_mean) * (a - c.accuracy_mean);
                c.accuracy_std = k > 1 ? std::sqrt(ss / (k - 1)) : 0.0;
            }
            cells.push_back(c);
        }
    }
    return cells;
}

BenchResult run_bench(const BenchSpec& spec) {
    spec.validate();
    struct Task {
        std::uint64_t seed;
        RegKind reg;
        Algorithm algo;
    };
    std::vector<Task> tasks;
    for (int s = 0; s < spec.seeds; ++s)
        for (RegKind reg : spec.regularizers)
            for (Algorithm algo : spec.algorithms) tasks.push_back({spec.first_seed + static_cast<std::uint64_t>(s), reg, algo});

    BenchResult res;
    res.spec = spec;
    res.trials.resize(tasks.size());
    const auto count = static_cast<long>(tasks.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(spec.workers)
    for (long k = 0; k < count; ++k) {
        const Task& task = tasks[static_cast<std::size_t>(k)];
        res.trials[static_cast<std::size_t>(k)] = run_trial(spec, task.seed, task.algo, task.reg);
    }
    res.cells = summarize(spec, res.trials);
    return res;
}

void write_bench_outputs(const BenchResult& res, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text_atomic(dir / "bench.json", to_json(res).dump(2) + "\n");

    std::ostringstream trials;
    trials << "seed,algorithm,regularizer,ok,lambda,eta,bic,accuracy,beta_accuracy,gamma_accuracy,f1,seconds,"
              "fit_seconds,iterations,termination,fits,failed_fits\n";
    for (const auto& t : res.trials)
        trials << t.seed << ',' << to_string(t.algorithm) << ',' << to_string(t.regularizer) << ','
               << (t.ok ? "true" : "false") << ',' << fmt_double(t.lambda) << ',' << fmt_double(t.eta) << ','
               << fmt_double(t.bic) << ',' << fmt_double(t.accuracy.joint) << ',' << fmt_double(t.accuracy.beta)
               << ',' << fmt_double(t.accuracy.gamma) << ',' << fmt_double(t.accuracy.f1) << ','
               << fmt_double(t.seconds) << ',' << fmt_double(t.fit_seconds) << ',' << t.iterations << ','
               << to_string(t.termination) << ',' << t.fits << ',' << t.failed_fits << '\n';
    write_text_atomic(dir / "bench_trials.csv", trials.str());

    std::ostringstream table;
    table << "regularizer";
    for (Algorithm a : res.spec.algorithms) {
        const std::string n = to_string(a);
        table << ',' << n << "_accuracy," << n << "_accuracy_std," << n << "_seconds," << n << "_seconds_per_fit";
    }
    table << '\n';
    for (RegKind reg : res.spec.regularizers) {
        table << to_string(reg);
        for (Algorithm a : res.spec.algorithms) {
            const CellSummary* c = res.cell(a, reg);
            table << ',' << fmt_double(c->accuracy_mean) << ',' << fmt_double(c->accuracy_std) << ','
                  << fmt_double(c->seconds_mean) << ',' << fmt_double(c->seconds_per_fit_mean);
        }
        table << '\n';
    }
    write_text_atomic(dir / "bench_table.csv", table.str());
}

} // namespace lmesel
