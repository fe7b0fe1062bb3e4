#include <random>

#include <benchmark/benchmark.h>

#include "lmesel/likelihood.hpp"
#include "lmesel/simulator.hpp"

using namespace lmesel;

namespace {

LMEProblem wide_problem(int groups) {
    SimConfig cfg = default_sim_config();
    cfg.group_sizes.clear();
    for (int i = 0; i < groups; ++i) cfg.group_sizes.push_back(10 + (i % 9));
    return generate(cfg).first;
}

void bench_evaluate(benchmark::State& state, Execution exec, Order order) {
    const LMEProblem prob = wide_problem(static_cast<int>(state.range(0)));
    const ParamPoint x{VectorXd::Constant(prob.p(), 0.5), VectorXd::Constant(prob.q(), 0.7)};
    for (auto _ : state) {
        LikelihoodEval ev = evaluate(prob, x, order, Curvature::psd, exec);
        benchmark::DoNotOptimize(ev.value);
    }
    state.SetItemsProcessed(state.iterations() * prob.m());
}

} // namespace

BENCHMARK_CAPTURE(bench_evaluate, value_serial, Execution::serial, Order::value)->Arg(9)->Arg(90)->Arg(900);
BENCHMARK_CAPTURE(bench_evaluate, value_parallel, Execution::parallel, Order::value)->Arg(9)->Arg(90)->Arg(900);
BENCHMARK_CAPTURE(bench_evaluate, hessian_serial, Execution::serial, Order::hessian)->Arg(9)->Arg(90)->Arg(900);
BENCHMARK_CAPTURE(bench_evaluate, hessian_parallel, Execution::parallel, Order::hessian)->Arg(9)->Arg(90)->Arg(900);

BENCHMARK_MAIN();
