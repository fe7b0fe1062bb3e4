#pragma once

#include <string>

#include "lmesel/error.hpp"
#include "lmesel/likelihood.hpp"

namespace lmesel {

/// Primal-dual iterate of the inner interior-point method. gamma and v stay
/// strictly positive at every accepted step.
struct KKTState {
    VectorXd beta;
    VectorXd gamma;
    VectorXd v;

    /// beta = 0, gamma = 1, v = 1.
    static KKTState initial(Index p, Index q);
    ParamPoint point() const { return {beta, gamma}; }
};

struct NewtonStep {
    VectorXd d_beta;
    VectorXd d_gamma;
    VectorXd d_v;
};

struct InnerOptions {
    double tol = 1e-8;        // on ||G||
    int max_iter = 100;
    bool use_psd_approx = true;
};

/// Result of minimizing the relaxed objective over (beta, gamma) at a fixed
/// outer point: the value function, its gradient eta * (outer - minimizer),
/// and the primal-dual solution that produced them.
struct ValueEval {
    double value = 0.0;
    VectorXd gradient;
    ParamPoint minimizer;
    VectorXd dual;
    double kkt_residual = 0.0;
    int newton_iters = 0;

    KKTState state() const { return {minimizer.beta, minimizer.gamma, dual}; }
};

/// Thrown when the inner Newton loop exhausts max_iter; carries the best iterate.
class InnerConvergenceError : public ConvergenceError {
public:
    InnerConvergenceError(const std::string& what, KKTState best, double residual)
        : ConvergenceError(what), best_(std::move(best)), residual_(residual) {}
    const KKTState& best() const { return best_; }
    double residual() const { return residual_; }

private:
    KKTState best_;
    double residual_;
};

/// An iterate together with the likelihood derivatives evaluated at it, so
/// the residual can be recomputed when outer or mu change without another
/// factorization.
struct NewtonIterate {
    KKTState state;
    LikelihoodEval eval;
};

NewtonIterate make_iterate(const LMEProblem& problem, KKTState state, bool use_psd_approx);

VectorXd kkt_residual(const NewtonIterate& it, const ParamPoint& outer, const RelaxConfig& cfg);

struct NewtonUpdate {
    NewtonIterate next;
    double alpha = 0.0;
    int halvings = 0;
};

/// One Newton step with fraction-to-boundary damping. If the damped step
/// inflates ||G|| more than tenfold, alpha is halved (at most 20 times).
NewtonUpdate damped_newton_step(const LMEProblem& problem, const NewtonIterate& current, const ParamPoint& outer,
                                const RelaxConfig& cfg, bool use_psd_approx);

/// G = [grad_beta L + eta (beta - beta~); grad_gamma L + eta (gamma - gamma~) - v; v o gamma - mu 1].
VectorXd kkt_residual(const LMEProblem& problem, const KKTState& state, const ParamPoint& outer,
                      const RelaxConfig& cfg);

/// Solves Jacobian(G) d = -G by eliminating dv and factoring the reduced
/// (p+q) system H + eta I + Diag(0, v / gamma).
NewtonStep newton_direction(const LMEProblem& problem, const KKTState& state, const ParamPoint& outer,
                            const RelaxConfig& cfg, bool use_psd_approx);

/// 0.99 * min(1, -gamma_i / dgamma_i over dgamma_i < 0, -v_i / dv_i over dv_i < 0).
double fraction_to_boundary(const VectorXd& gamma, const VectorXd& d_gamma, const VectorXd& v,
                            const VectorXd& d_v);

/// ||gamma o v - (gamma^T v / q) 1|| <= 0.5 gamma^T v / q
bool central_path_ok(const VectorXd& gamma, const VectorXd& v);

/// Damped Newton on G = 0 at fixed (eta, mu). Throws InnerConvergenceError
/// if ||G|| > tol after max_iter steps.
ValueEval eval_value_function(const LMEProblem& problem, const ParamPoint& outer, const RelaxConfig& cfg,
                              const InnerOptions& opts = {}, const KKTState* warm_start = nullptr);

/// eta / (eta - eta_bar) * (1 + ||H1^-1 R||^2) at the minimizer, where
/// H1 = grad_bb L + eta I and R = grad_bg L.
double lipschitz_diagnostic(const LMEProblem& problem, const ValueEval& eval, const RelaxConfig& cfg);

/// ||H1^-1 R|| at a point; exposed for the bound checks.
double coupling_block_norm(const LMEProblem& problem, const ParamPoint& point, double eta);

} // namespace lmesel
