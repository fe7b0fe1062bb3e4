#pragma once

#include "lmesel/problem.hpp"

namespace lmesel {

/// How per-group contributions are accumulated. Solvers default to serial;
/// the OpenMP path splits groups across threads and is checked against the
/// serial reference in the tests.
enum class Execution { serial, parallel };

/// Highest derivative an evaluation should produce.
enum class Order { value, gradient, hessian };

/// Which curvature to assemble when Order::hessian is requested.
enum class Curvature {
    exact,  // full second derivative of the marginal likelihood
    psd     // drops the -1/2 (Z^T Omega^-1 Z)^{o2} term, PSD by construction
};

/// Value, gradient and (optionally) Hessian of the marginal negative
/// log-likelihood at a single point. gradient and hessian use the stacked
/// [beta; gamma] layout.
struct LikelihoodEval {
    double value = 0.0;
    VectorXd gradient;
    MatrixXd hessian;
};

/// Coupling and barrier weights of the relaxed objective.
struct RelaxConfig {
    double eta = 1.0;
    double mu = 0.0;
};

/// Omega_i(gamma) = Z_i Diag(gamma) Z_i^T + Lambda_i.
MatrixXd omega(const LMEProblem& problem, Index group, const VectorXd& gamma);

/// Evaluates everything at one point, factorizing each Omega_i once.
LikelihoodEval evaluate(const LMEProblem& problem, const ParamPoint& point, Order order,
                        Curvature curvature = Curvature::exact, Execution exec = Execution::serial);

double neg_loglik(const LMEProblem& problem, const ParamPoint& point);
VectorXd grad(const LMEProblem& problem, const ParamPoint& point);
MatrixXd hess(const LMEProblem& problem, const ParamPoint& point);
MatrixXd hess_psd_approx(const LMEProblem& problem, const ParamPoint& point);

/// Perspective of the negative log: -mu * sum ln(gamma_j / mu) for mu > 0,
/// the indicator of gamma >= 0 for mu = 0. Returns +inf outside the domain.
double log_barrier(const VectorXd& gamma, double mu);

/// (eta / 2) ||d||^2
double coupling(const VectorXd& d, double eta);

/// L(inner) + barrier(inner.gamma) + coupling(inner - outer).
double relaxed_objective(const LMEProblem& problem, const ParamPoint& inner, const ParamPoint& outer,
                         const RelaxConfig& cfg);

/// Weak-convexity threshold m * max_i 1/2 mu_min(Lambda_i)^-2 sigma_max(Z_i)^4.
double eta_bar(const LMEProblem& problem);

/// Single-group term f(r, M) = 1/2 [r^T M^-1 r + ln det M].
double group_term(const VectorXd& r, const MatrixXd& M);
/// max{ln(|r|^2 / n), ln |M|} + (n-1)/2 ln mu_min(M). Not a valid bound in
/// general: n = 1, r = 0, M = 2 gives f = ln(2) / 2 below the bound ln(2).
double group_term_lower_bound(const VectorXd& r, const MatrixXd& M);
/// 1/2 max{1 + ln(|r|^2 / n), ln |M|} + (n-1)/2 ln mu_min(M), which does
/// bound group_term from below.
double group_term_lower_bound_valid(const VectorXd& r, const MatrixXd& M);

/// gamma entries in (-kBoundaryTol, 0) are treated as exactly zero.
inline constexpr double kBoundaryTol = 1e-12;

} // namespace lmesel
