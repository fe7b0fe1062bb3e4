#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmesel/algorithms.hpp"

namespace lmesel::verify {

// Random instances for the property suites.
struct InstanceShape {
    Index p_max = 4;
    Index q_max = 4;
    Index groups_max = 4;
    Index group_size_max = 6;
};

LMEProblem random_problem(std::mt19937_64& rng, const InstanceShape& shape = {});
/// beta ~ N(0, 1), gamma ~ U(gamma_lo, gamma_hi).
ParamPoint random_point(std::mt19937_64& rng, Index p, Index q, double gamma_lo = 0.1, double gamma_hi = 2.0);

/// Test hooks that deliberately break a suite's subject to show it can fail.
struct Faults {
    bool corrupt_gradient = false;  // adds 1e-3 to the first analytic gradient entry
};

struct SuiteResult {
    std::string name;
    bool passed = false;
    std::string summary;     // one human-readable line
    nlohmann::json metrics;  // worst errors, counts, tables
    double seconds = 0.0;
};

struct DerivativeOptions {
    int instances = 50;
    double grad_tol = 1e-5;
    double hess_tol = 1e-4;
    std::uint64_t seed = 11;
};
/// Analytic gradient / Hessian against central differences.
SuiteResult derivative_suite(const DerivativeOptions& opts = {}, const Faults& faults = {});

/// The per-group bound check runs over the same instances and points as the
/// derivative suite. `stated` picks the bound as commonly written, otherwise
/// the corrected one.
SuiteResult group_bound_suite(bool stated, const DerivativeOptions& opts = {}, double slack = 1e-10);

struct ValueGradientOptions {
    int combos = 20;
    double tol = 1e-4;
    double inner_tol = 1e-11;
    std::uint64_t seed = 23;
};
/// eta (outer - minimizer) against central differences of the value function.
SuiteResult value_gradient_suite(const ValueGradientOptions& opts = {});

struct SpectralOptions {
    int instances = 10;
    int points = 100;
    double factor = 1.05;
    std::uint64_t seed = 37;
};
/// min eig of hess L + eta I at eta = factor * eta_bar is >= (factor - 1.01) * eta_bar,
/// and on the one-dimensional adversarial instance eta = eta_bar / 2 leaves a
/// negative eigenvalue.
SuiteResult spectral_suite(const SpectralOptions& opts = {});

struct ProxOptions {
    int problems = 200;
    double spacing = 1e-4;
    double margin = -1e-8;
    std::uint64_t seed = 41;
};
/// Every prox (plain and nonneg) against a dense scalar grid.
SuiteResult prox_suite(const ProxOptions& opts = {});

struct ConsistencyOptions {
    double gap_slack = 1e-9;  // relative slack in the nonincreasing test
    double mu_distance = 1e-2;
    std::uint64_t seed = 3;
};
/// eta and mu tables of consistency_probe on a p = q = 1 simulated instance.
SuiteResult consistency_suite(const ConsistencyOptions& opts = {});

/// Checks a backtracking pgd_value trace: every step satisfies
/// Phi(w+) <= Phi(w) - tau t ||dw||^2 and min residual * sqrt(k + 1) stays
/// below t0 sqrt((Phi_0 - Phi_end) / (tau t_min^3)).
struct TraceCheck {
    bool decrease_ok = true;
    bool rate_ok = true;
    int steps = 0;
    double worst_decrease_violation = 0.0;
    double rate_max = 0.0;    // max over k of min-residual * sqrt(k + 1)
    double rate_bound = 0.0;
};
TraceCheck check_backtracking_trace(const SolveReport& report, double t0, double tau);

struct TraceOptions {
    int seeds = 3;
    double eta = 1.0;
    std::vector<double> lambdas{0.03, 0.3};
};
/// Runs backtracking pgd_value on corpus problems and checks the traces.
SuiteResult trace_suite(const TraceOptions& opts = {});

/// Serial and OpenMP likelihood kernels agree to 1e-12 relative.
SuiteResult parallel_suite(std::uint64_t seed = 5);

struct Report {
    std::vector<SuiteResult> suites;
    bool passed() const;
    nlohmann::json to_json() const;
};

/// quick: derivatives, corrected group bound, value gradient, spectral, prox, parallel.
/// full adds the consistency tables and the trace checks.
Report run(bool full, const Faults& faults = {});

} // namespace lmesel::verify
