#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lmesel/inner_solver.hpp"
#include "lmesel/regularizers.hpp"

namespace lmesel {

enum class Algorithm {
    pgd,        // proximal gradient on L + R
    pgd_value,  // proximal gradient on the value function u + R~
    msr3,
    msr3_fast
};

Algorithm parse_algorithm(const std::string& name);
std::string to_string(Algorithm algo);

enum class Termination { converged, max_iter, gamma_max_exceeded };
std::string to_string(Termination t);

struct Backtracking {
    std::optional<double> t0;  // initial trial step; defaults to 1 for pgd, 1/eta for pgd_value
    double theta = 0.5;        // shrink factor in (0, 1)
    double tau = 0.5;          // sufficient-decrease constant in (0, 1)
    int max_halvings = 60;
};

struct SolverConfig {
    double eta = 1.0;
    std::optional<double> mu;             // pgd_value barrier weight; unset means v^T gamma / (10 q)
    double mu_min = 1e-9;                 // MSR3 / MSR3-fast never reduce mu below this
    std::optional<double> prox_step;      // MSR3 / MSR3-fast prox scale; unset means 1 / eta
    std::optional<double> fixed_step;     // PGD fixed step; unset means backtracking
    Backtracking backtracking;
    double tol = 1e-6;
    int max_iter = 1000;                  // outer iterations (the single loop for MSR3-fast)
    int max_iter_inner = 100;
    double inner_tol = 1e-8;
    std::optional<VectorXd> gamma_max;    // unset means default_gamma_max(problem); length 1 broadcasts
    bool use_psd_approx = true;
    bool warm_start = true;               // MSR3: reuse the previous inner solution
    std::optional<ParamPoint> initial;    // unset means beta = 0, gamma = 1

    void validate() const;
};

struct TraceRow {
    int iter = 0;
    double objective = 0.0;
    double residual = 0.0;       // stationarity measure of the algorithm (see README)
    double mu = 0.0;
    double step = 0.0;           // accepted step / prox scale
    double step_norm_sq = 0.0;   // ||w_{k+1} - w_k||^2
    double prev_objective = 0.0; // objective before the step
    double seconds = 0.0;        // elapsed since solve start
};

struct SolveReport {
    std::string algorithm;
    VectorXd beta_tilde;
    VectorXd gamma_tilde;
    VectorXd beta_hat;
    VectorXd gamma_hat;
    std::vector<bool> beta_mask;
    std::vector<bool> gamma_mask;
    std::vector<TraceRow> trace;
    Termination termination = Termination::max_iter;
    int iterations = 0;
    int newton_iters = 0;
    double final_objective = 0.0;
    double seconds = 0.0;

    ParamPoint sparse_point() const { return {beta_tilde, gamma_tilde}; }
};

/// 100 * (largest per-group sample variance of Y), floored at 10, in every coordinate.
VectorXd default_gamma_max(const LMEProblem& problem);

SolveReport pgd_naive(const LMEProblem& problem, const Regularizer& reg, const SolverConfig& cfg);
SolveReport pgd_value(const LMEProblem& problem, const Regularizer& reg, const SolverConfig& cfg);
SolveReport msr3(const LMEProblem& problem, const Regularizer& reg, const SolverConfig& cfg);
SolveReport msr3_fast(const LMEProblem& problem, const Regularizer& reg, const SolverConfig& cfg);

SolveReport run_algorithm(Algorithm algo, const LMEProblem& problem, const Regularizer& reg,
                          const SolverConfig& cfg);

} // namespace lmesel
