#include "lmesel/inner_solver.hpp"

#include <sstream>

#include <cmath>
#include <limits>

namespace lmesel {

KKTState KKTState::initial(Index p, Index q) {
    return {VectorXd::Zero(p), VectorXd::Ones(q), VectorXd::Ones(q)};
}

namespace {

Curvature curvature_for(bool use_psd_approx) { return use_psd_approx ? Curvature::psd : Curvature::exact; }

void check_outer(const LMEProblem& problem, const ParamPoint& outer) {
    if (outer.beta.size() != problem.p() || outer.gamma.size() != problem.q())
        throw ValidationError("outer point has the wrong dimensions");
}

VectorXd residual_from(const VectorXd& gradient, const KKTState& s, const ParamPoint& outer, const RelaxConfig& cfg) {
    const Index p = s.beta.size();
    const Index q = s.gamma.size();
    VectorXd g(p + 2 * q);
    g.head(p) = gradient.head(p) + cfg.eta * (s.beta - outer.beta);
    g.segment(p, q) = gradient.tail(q) + cfg.eta * (s.gamma - outer.gamma) - s.v;
    g.tail(q) = s.v.cwiseProduct(s.gamma).array() - cfg.mu;
    return g;
}

NewtonStep solve_reduced(const MatrixXd& hessian, const VectorXd& G, const KKTState& s, const RelaxConfig& cfg,
                         bool use_psd_approx) {
    const Index p = s.beta.size();
    const Index q = s.gamma.size();
    MatrixXd K = hessian;
    K.diagonal().array() += cfg.eta;
    K.diagonal().tail(q) += s.v.cwiseQuotient(s.gamma);

    VectorXd rhs(p + q);
    rhs.head(p) = -G.head(p);
    rhs.tail(q) = -(G.segment(p, q) + G.tail(q).cwiseQuotient(s.gamma));

    VectorXd d;
    const Eigen::LLT<MatrixXd> llt(K);
    if (llt.info() == Eigen::Success) {
        d = llt.solve(rhs);
    } else {
        d = Eigen::FullPivLU<MatrixXd>(K).solve(rhs);
    }
    const double scale = K.norm() * d.norm() + rhs.norm();
    if (!d.allFinite() || (K * d - rhs).norm() > 1e-10 * std::max(scale, 1.0)) {
        throw NumericalError(use_psd_approx
                                 ? "Newton system is singular"
                                 : "Newton system with the exact Hessian is singular; increase eta above eta_bar "
                                   "or enable the PSD Hessian approximation");
    }

    NewtonStep step;
    step.d_beta = d.head(p);
    step.d_gamma = d.tail(q);
    step.d_v = (-G.tail(q) - s.v.cwiseProduct(step.d_gamma)).cwiseQuotient(s.gamma);
    return step;
}

KKTState advance(const KKTState& s, const NewtonStep& d, double alpha) {
    return {s.beta + alpha * d.d_beta, s.gamma + alpha * d.d_gamma, s.v + alpha * d.d_v};
}

} // namespace

NewtonIterate make_iterate(const LMEProblem& problem, KKTState state, bool use_psd_approx) {
    if (!(state.gamma.array() > 0.0).all() || !(state.v.array() > 0.0).all())
        throw ValidationError("Newton iterate needs gamma > 0 and v > 0");
    LikelihoodEval eval = evaluate(problem, state.point(), Order::hessian, curvature_for(use_psd_approx));
    return {std::move(state), std::move(eval)};
}

VectorXd kkt_residual(const NewtonIterate& it, const ParamPoint& outer, const RelaxConfig& cfg) {
    return residual_from(it.eval.gradient, it.state, outer, cfg);
}

VectorXd kkt_residual(const LMEProblem& problem, const KKTState& state, const ParamPoint& outer,
                      const RelaxConfig& cfg) {
    check_outer(problem, outer);
    if (!(state.gamma.array() > 0.0).all()) throw ValidationError("kkt_residual needs gamma > 0");
    return residual_from(grad(problem, state.point()), state, outer, cfg);
}

NewtonStep newton_direction(const LMEProblem& problem, const KKTState& state, const ParamPoint& outer,
                            const RelaxConfig& cfg, bool use_psd_approx) {
    check_outer(problem, outer);
    const NewtonIterate it = make_iterate(problem, state, use_psd_approx);
    return solve_reduced(it.eval.hessian, kkt_residual(it, outer, cfg), it.state, cfg, use_psd_approx);
}

double fraction_to_boundary(const VectorXd& gamma, const VectorXd& d_gamma, const VectorXd& v, const VectorXd& d_v) {
    double ratio = 1.0;
    for (Index i = 0; i < gamma.size(); ++i)
        if (d_gamma(i) < 0.0) ratio = std::min(ratio, -gamma(i) / d_gamma(i));
    for (Index i = 0; i < v.size(); ++i)
        if (d_v(i) < 0.0) ratio = std::min(ratio, -v(i) / d_v(i));
    return 0.99 * ratio;
}

bool central_path_ok(const VectorXd& gamma, const VectorXd& v) {
    const VectorXd prod = gamma.cwiseProduct(v);
    const double mean = prod.sum() / static_cast<double>(prod.size());
    return (prod.array() - mean).matrix().norm() <= 0.5 * mean;
}

NewtonUpdate damped_newton_step(const LMEProblem& problem, const NewtonIterate& current, const ParamPoint& outer,
                                const RelaxConfig& cfg, bool use_psd_approx) {
    const VectorXd G = kkt_residual(current, outer, cfg);
    const NewtonStep d = solve_reduced(current.eval.hessian, G, current.state, cfg, use_psd_approx);
    double alpha = fraction_to_boundary(current.state.gamma, d.d_gamma, current.state.v, d.d_v);
    const double g_norm = G.norm();

    NewtonUpdate out;
    for (int halvings = 0;; ++halvings) {
        out.next = make_iterate(problem, advance(current.state, d, alpha), use_psd_approx);
        out.alpha = alpha;
        out.halvings = halvings;
        const double trial = kkt_residual(out.next, outer, cfg).norm();
        if ((std::isfinite(trial) && trial <= 10.0 * g_norm) || halvings == 20) break;
        alpha *= 0.5;
    }
    return out;
}

ValueEval eval_value_function(const LMEProblem& problem, const ParamPoint& outer, const RelaxConfig& cfg,
                              const InnerOptions& opts, const KKTState* warm_start) {
    check_outer(problem, outer);
    if (!(cfg.eta > 0.0)) throw ValidationError("eta must be positive");
    if (!(cfg.mu > 0.0)) throw ValidationError("the inner solve needs mu > 0");

    NewtonIterate it = make_iterate(problem, warm_start ? *warm_start : KKTState::initial(problem.p(), problem.q()),
                                    opts.use_psd_approx);
    KKTState best = it.state;
    double best_norm = std::numeric_limits<double>::infinity();
    for (int iter = 0;; ++iter) {
        const double g_norm = kkt_residual(it, outer, cfg).norm();
        if (g_norm < best_norm) {
            best_norm = g_norm;
            best = it.state;
        }
        if (g_norm <= opts.tol) {
            ValueEval out;
            out.minimizer = it.state.point();
            out.dual = it.state.v;
            out.value = it.eval.value + log_barrier(it.state.gamma, cfg.mu) +
                        coupling(out.minimizer.stacked() - outer.stacked(), cfg.eta);
            out.gradient = cfg.eta * (outer.stacked() - out.minimizer.stacked());
            out.kkt_residual = g_norm;
            out.newton_iters = iter;
            return out;
        }
        if (iter >= opts.max_iter) {
            std::ostringstream msg;
            msg << "inner Newton solve did not reach ||G|| <= " << opts.tol << " in " << opts.max_iter
                << " iterations (best " << best_norm << ")";
            throw InnerConvergenceError(msg.str(), best, best_norm);
        }
        it = damped_newton_step(problem, it, outer, cfg, opts.use_psd_approx).next;
    }
}

double coupling_block_norm(const LMEProblem& problem, const ParamPoint& point, double eta) {
    const Index p = problem.p();
    const Index q = problem.q();
    MatrixXd h = hess(problem, point);
    MatrixXd h1 = h.topLeftCorner(p, p);
    h1.diagonal().array() += eta;
    const MatrixXd coupled = Eigen::LLT<MatrixXd>(h1).solve(MatrixXd(h.topRightCorner(p, q)));
    return Eigen::JacobiSVD<MatrixXd>(coupled).singularValues()(0);
}

double lipschitz_diagnostic(const LMEProblem& problem, const ValueEval& eval, const RelaxConfig& cfg) {
    const double bar = eta_bar(problem);
    if (!(cfg.eta > bar)) throw ValidationError("lipschitz_diagnostic needs eta > eta_bar");
    const double k = coupling_block_norm(problem, eval.minimizer, cfg.eta);
    return cfg.eta / (cfg.eta - bar) * (1.0 + k * k);
}

} // namespace lmesel
