#include "lmesel/algorithms.hpp"

#include <chrono>
#include <cmath>

namespace lmesel {

Algorithm parse_algorithm(const std::string& name) {
    if (name == "pgd" || name == "pgd_naive") return Algorithm::pgd;
    if (name == "pgd_value") return Algorithm::pgd_value;
    if (name == "msr3") return Algorithm::msr3;
    if (name == "msr3_fast" || name == "msr3-fast") return Algorithm::msr3_fast;
    throw ValidationError("unknown algorithm \"" + name + "\" (expected pgd, pgd_value, msr3 or msr3_fast)");
}

std::string to_string(Algorithm algo) {
    switch (algo) {
    case Algorithm::pgd: return "pgd";
    case Algorithm::pgd_value: return "pgd_value";
    case Algorithm::msr3: return "msr3";
    case Algorithm::msr3_fast: return "msr3_fast";
    }
    return "?";
}

std::string to_string(Termination t) {
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iter: return "max_iter";
    case Termination::gamma_max_exceeded: return "gamma_max_exceeded";
    }
    return "?";
}

void SolverConfig::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("eta must be positive");
    if (mu && !(*mu > 0.0)) throw ValidationError("mu must be positive");
    if (!(mu_min > 0.0)) throw ValidationError("mu_min must be positive");
    if (prox_step && !(*prox_step > 0.0)) throw ValidationError("prox_step must be positive");
    if (fixed_step && !(*fixed_step > 0.0)) throw ValidationError("fixed step must be positive");
    if (backtracking.t0 && !(*backtracking.t0 > 0.0)) throw ValidationError("t0 must be positive");
    if (!(backtracking.theta > 0.0 && backtracking.theta < 1.0)) throw ValidationError("theta must lie in (0, 1)");
    if (!(backtracking.tau > 0.0 && backtracking.tau < 1.0)) throw ValidationError("tau must lie in (0, 1)");
    if (backtracking.max_halvings < 0) throw ValidationError("max_halvings must be >= 0");
    if (!(tol > 0.0)) throw ValidationError("tol must be positive");
    if (!(inner_tol > 0.0)) throw ValidationError("inner_tol must be positive");
    if (max_iter < 1 || max_iter_inner < 1) throw ValidationError("iteration limits must be >= 1");
    if (gamma_max && !(gamma_max->array() > 0.0).all()) throw ValidationError("gamma_max must be positive");
}

VectorXd default_gamma_max(const LMEProblem& problem) {
    double var = 0.0;
    for (const auto& g : problem.groups()) {
        const Index ni = g.y.size();
        if (ni < 2) continue;
        const double mean = g.y.mean();
        var = std::max(var, (g.y.array() - mean).square().sum() / static_cast<double>(ni - 1));
    }
    return VectorXd::Constant(problem.q(), std::max(100.0 * var, 10.0));
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Setup {
    Index p;
    Index q;
    VectorXd gamma_max;
    ParamPoint start;
};

Setup prepare(const LMEProblem& problem, const Regularizer& reg, const SolverConfig& cfg, bool interior) {
    cfg.validate();
    Setup s{problem.p(), problem.q(), {}, {}};
    reg.validate(s.p + s.q);
    s.gamma_max = cfg.gamma_max ? *cfg.gamma_max : default_gamma_max(problem);
    if (s.gamma_max.size() == 1) s.gamma_max = VectorXd::Constant(s.q, s.gamma_max(0));
    if (s.gamma_max.size() != s.q) throw ValidationError("gamma_max must have length q");
    s.start = cfg.initial ? *cfg.initial : ParamPoint{VectorXd::Zero(s.p), VectorXd::Ones(s.q)};
    if (s.start.beta.size() != s.p || s.start.gamma.size() != s.q)
        throw ValidationError("initial point has the wrong dimensions");
    if (interior ? !(s.start.gamma.array() > 0.0).all() : !(s.start.gamma.array() >= 0.0).all())
        throw ValidationError(interior ? "initial gamma must be strictly positive" : "initial gamma must be >= 0");
    return s;
}

bool exceeds(const VectorXd& gamma, const VectorXd& gamma_max) { return (gamma.array() > gamma_max.array()).any(); }

double dual_mu(const VectorXd& v, const VectorXd& gamma) {
    return v.dot(gamma) / (10.0 * static_cast<double>(gamma.size()));
}

double dual_mu(const VectorXd& v, const VectorXd& gamma, double floor) { return std::max(dual_mu(v, gamma), floor); }

void finish(SolveReport& rep, const VectorXd& w_tilde, const ParamPoint& hat, Index p, Clock::time_point start) {
    const ParamPoint tilde = ParamPoint::split(w_tilde, p);
    rep.beta_tilde = tilde.beta;
    rep.gamma_tilde = tilde.gamma;
    rep.beta_hat = hat.beta;
    rep.gamma_hat = hat.gamma;
    rep.beta_mask = select_mask(rep.beta_tilde);
    rep.gamma_mask = select_mask(rep.gamma_tilde);
    rep.iterations = static_cast<int>(rep.trace.size());
    rep.final_objective = rep.trace.empty() ? 0.0 : rep.trace.back().objective;
    rep.seconds = since(start);
}

} // namespace

SolveReport pgd_naive(const LMEProblem& problem, const Regularizer& reg, const SolverConfig& cfg) {
    const auto start = Clock::now();
    const Setup s = prepare(problem, reg, cfg, false);
    const Index p = s.p;
    const Index q = s.q;

    SolveReport rep;
    rep.algorithm = "pgd";
    VectorXd x = s.start.stacked();
    LikelihoodEval ex = evaluate(problem, s.start, Order::gradient);
    double fx = ex.value + penalty(reg, x, q);
    rep.termination = Termination::max_iter;

    for (int k = 0; k < cfg.max_iter; ++k) {
        double t = cfg.fixed_step ? *cfg.fixed_step : cfg.backtracking.t0.value_or(1.0);
        VectorXd xn;
        LikelihoodEval en;
        double fn = 0.0;
        for (int halvings = 0;; ++halvings) {
            xn = prox(reg, {x - t * ex.gradient, t, q});
            en = evaluate(problem, ParamPoint::split(xn, p), Order::gradient);
            fn = en.value + penalty(reg, xn, q);
            if (cfg.fixed_step) break;
            if (fn <= fx - cfg.backtracking.tau * t * (xn - x).squaredNorm()) break;
            if (halvings >= cfg.backtracking.max_halvings)
                throw StepFailure("pgd: backtracking failed after " + std::to_string(halvings) + " reductions");
            t *= cfg.backtracking.theta;
        }
        const double dx2 = (xn - x).squaredNorm();
        rep.trace.push_back({k, fn, std::sqrt(dx2), 0.0, t, dx2, fx, since(start)});
        x = std::move(xn);
        ex = std::move(en);
        fx = fn;
        if (!std::isfinite(fx) || exceeds(x.tail(q), s.gamma_max)) {
            rep.termination = Termination::gamma_max_exceeded;
            break;
        }
        if (std::sqrt(dx2) <= cfg.tol) {
            rep.termination = Termination::converged;
            break;
        }
    }
    finish(rep, x, ParamPoint::split(x, p), p, start);
    return rep;
}

SolveReport pgd_value(const LMEProblem& problem, const Regularizer& reg, const SolverConfig& cfg) {
    const auto start = Clock::now();
    const Setup s = prepare(problem, reg, cfg, false);
    const Index p = s.p;
    const Index q = s.q;
    const RelaxConfig rc{cfg.eta, cfg.mu.value_or(dual_mu(VectorXd::Ones(q), s.start.gamma))};
    if (!(rc.mu > 0.0)) throw ValidationError("pgd_value needs mu > 0 (initial gamma is all zero)");
    const InnerOptions io{cfg.inner_tol, cfg.max_iter_inner, cfg.use_psd_approx};

    int iteration = 0;
    int newton = 0;
    const auto eval_u = [&](const VectorXd& w, const KKTState* warm) {
        try {
            ValueEval e = eval_value_function(problem, ParamPoint::split(w, p), rc, io, warm);
            newton += e.newton_iters;
            return e;
        } catch (const InnerConvergenceError& e) {
            throw ConvergenceError("pgd_value: inner solve failed at iteration " + std::to_string(iteration) + ": " +
                                   e.what());
        }
    };
    const auto phi = [&](const ValueEval& u, const VectorXd& w) { return u.value + penalty(reg, w, q); };

    SolveReport rep;
    rep.algorithm = "pgd_value";
    rep.termination = Termination::max_iter;

    VectorXd w_bar = s.start.stacked();
    ValueEval u_bar = eval_u(w_bar, nullptr);

    if (cfg.fixed_step) {
        const double alpha = *cfg.fixed_step;
        VectorXd w = w_bar;
        ValueEval uw = u_bar;
        double fw = phi(uw, w);
        for (iteration = 0; iteration < cfg.max_iter; ++iteration) {
            VectorXd wn = prox(reg, {w - alpha * uw.gradient, alpha, q});
            const KKTState warm = uw.state();
            ValueEval un = eval_u(wn, &warm);
            const double fn = phi(un, wn);
            const double dw2 = (wn - w).squaredNorm();
            rep.trace.push_back({iteration, fn, std::sqrt(dw2), rc.mu, alpha, dw2, fw, since(start)});
            w = std::move(wn);
            uw = std::move(un);
            fw = fn;
            if (exceeds(w.tail(q), s.gamma_max)) {
                rep.termination = Termination::gamma_max_exceeded;
                break;
            }
            if (std::sqrt(dw2) <= cfg.tol) {
                rep.termination = Termination::converged;
                break;
            }
        }
        rep.newton_iters = newton;
        finish(rep, w, uw.minimizer, p, start);
        return rep;
    }

    const double t0 = cfg.backtracking.t0.value_or(1.0 / cfg.eta);
    VectorXd w = prox(reg, {w_bar - t0 * u_bar.gradient, t0, q});
    ValueEval uw = [&] {
        const KKTState warm = u_bar.state();
        return eval_u(w, &warm);
    }();
    double fw = phi(uw, w);
    rep.trace.push_back({0, fw, std::sqrt((w - w_bar).squaredNorm()), rc.mu, 0.0, 0.0, fw, since(start)});

    for (iteration = 1; iteration <= cfg.max_iter; ++iteration) {
        if (exceeds(w.tail(q), s.gamma_max)) {
            rep.termination = Termination::gamma_max_exceeded;
            break;
        }
        if ((w - w_bar).norm() <= cfg.tol) {
            rep.termination = Termination::converged;
            break;
        }
        if (iteration == cfg.max_iter) break;

        const KKTState warm = uw.state();
        double t = t0;
        VectorXd wt;
        ValueEval ut;
        double ft = 0.0;
        double residual = 0.0;
        for (int halvings = 0;; ++halvings) {
            wt = prox(reg, {w - t * uw.gradient, t, q});
            if (halvings == 0) residual = (w - wt).norm();
            ut = eval_u(wt, &warm);
            ft = phi(ut, wt);
            if (ft <= fw - cfg.backtracking.tau * t * (w - wt).squaredNorm()) break;
            if (halvings >= cfg.backtracking.max_halvings)
                throw StepFailure("pgd_value: backtracking failed after " + std::to_string(halvings) + " reductions");
            t *= cfg.backtracking.theta;
        }
        const double dw2 = (wt - w).squaredNorm();
        rep.trace.push_back({iteration, ft, residual, rc.mu, t, dw2, fw, since(start)});
        w_bar = std::move(w);
        w = std::move(wt);
        uw = std::move(ut);
        fw = ft;
    }
    rep.newton_iters = newton;
    finish(rep, w, uw.minimizer, p, start);
    return rep;
}

SolveReport msr3(const LMEProblem& problem, const Regularizer& reg, const SolverConfig& cfg) {
    const auto start = Clock::now();
    const Setup s = prepare(problem, reg, cfg, true);
    const Index p = s.p;
    const Index q = s.q;
    const double alpha_prox = cfg.prox_step.value_or(1.0 / cfg.eta);
    const bool psd = cfg.use_psd_approx;

    SolveReport rep;
    rep.algorithm = "msr3";

    VectorXd w_tilde = s.start.stacked();  // (beta~+, gamma~+)
    NewtonIterate it = make_iterate(problem, {s.start.beta, s.start.gamma, VectorXd::Ones(q)}, psd);
    bool progress = true;
    bool gamma_hit = false;
    double prev_objective = 0.0;
    int outer = 0;
    while (outer < cfg.max_iter && progress) {
        KKTState state = it.state;
        if (!cfg.warm_start && outer > 0) {
            state.beta = s.start.beta;
            state.gamma = s.start.gamma;
        }
        state.v = VectorXd::Ones(q);
        it = make_iterate(problem, std::move(state), psd);
        RelaxConfig rc{cfg.eta, dual_mu(it.state.v, it.state.gamma, cfg.mu_min)};
        const VectorXd w_prev = w_tilde;
        const ParamPoint outer_pt = ParamPoint::split(w_tilde, p);

        VectorXd beta_prev;
        VectorXd gamma_prev;
        double g_norm = kkt_residual(it, outer_pt, rc).norm();
        for (int inner = 0; inner < cfg.max_iter_inner && g_norm > cfg.tol; ++inner) {
            if (inner > 0 && (it.state.beta - beta_prev).norm() < cfg.tol &&
                (it.state.gamma - gamma_prev).norm() < cfg.tol)
                break;
            beta_prev = it.state.beta;
            gamma_prev = it.state.gamma;
            it = damped_newton_step(problem, it, outer_pt, rc, psd).next;
            ++rep.newton_iters;
            if (central_path_ok(it.state.gamma, it.state.v)) rc.mu = dual_mu(it.state.v, it.state.gamma, cfg.mu_min);
            g_norm = kkt_residual(it, outer_pt, rc).norm();
        }

        VectorXd x = it.state.point().stacked();
        w_tilde = prox(reg, {x, alpha_prox, q});
        ++outer;
        progress = (w_tilde.head(p) - w_prev.head(p)).norm() >= cfg.tol ||
                   (w_tilde.tail(q) - w_prev.tail(q)).norm() >= cfg.tol;

        const double objective = it.eval.value + log_barrier(it.state.gamma, rc.mu) +
                                 coupling(x - w_tilde, cfg.eta) + penalty(reg, w_tilde, q);
        const double dw2 = (w_tilde - w_prev).squaredNorm();
        rep.trace.push_back({outer - 1, objective, g_norm, rc.mu, alpha_prox, dw2,
                             rep.trace.empty() ? objective : prev_objective, since(start)});
        prev_objective = objective;
        if (exceeds(w_tilde.tail(q), s.gamma_max)) {
            gamma_hit = true;
            break;
        }
    }
    rep.termination = gamma_hit ? Termination::gamma_max_exceeded
                      : progress ? Termination::max_iter
                                 : Termination::converged;
    finish(rep, w_tilde, it.state.point(), p, start);
    return rep;
}

SolveReport msr3_fast(const LMEProblem& problem, const Regularizer& reg, const SolverConfig& cfg) {
    const auto start = Clock::now();
    const Setup s = prepare(problem, reg, cfg, true);
    const Index p = s.p;
    const Index q = s.q;
    const double alpha_prox = cfg.prox_step.value_or(1.0 / cfg.eta);
    const bool psd = cfg.use_psd_approx;

    SolveReport rep;
    rep.algorithm = "msr3_fast";

    VectorXd w_tilde = s.start.stacked();
    NewtonIterate it = make_iterate(problem, {s.start.beta, s.start.gamma, VectorXd::Ones(q)}, psd);
    RelaxConfig rc{cfg.eta, dual_mu(it.state.v, it.state.gamma, cfg.mu_min)};

    bool progress = true;
    bool gamma_hit = false;
    double g_norm = kkt_residual(it, ParamPoint::split(w_tilde, p), rc).norm();
    double prev_objective = 0.0;
    int iter = 0;
    while (iter < cfg.max_iter && g_norm > cfg.tol && progress) {
        const VectorXd x_prev = it.state.point().stacked();
        const VectorXd w_prev = w_tilde;
        it = damped_newton_step(problem, it, ParamPoint::split(w_tilde, p), rc, psd).next;
        ++rep.newton_iters;
        const VectorXd x = it.state.point().stacked();
        if (central_path_ok(it.state.gamma, it.state.v)) {
            w_tilde = prox(reg, {x, alpha_prox, q});
            rc.mu = dual_mu(it.state.v, it.state.gamma, cfg.mu_min);
        }
        progress = (x.head(p) - x_prev.head(p)).norm() >= cfg.tol ||
                   (x.tail(q) - x_prev.tail(q)).norm() >= cfg.tol ||
                   (w_tilde.head(p) - w_prev.head(p)).norm() >= cfg.tol ||
                   (w_tilde.tail(q) - w_prev.tail(q)).norm() >= cfg.tol;
        g_norm = kkt_residual(it, ParamPoint::split(w_tilde, p), rc).norm();

        const double objective = it.eval.value + log_barrier(it.state.gamma, rc.mu) +
                                 coupling(x - w_tilde, cfg.eta) + penalty(reg, w_tilde, q);
        const double dw2 = (w_tilde - w_prev).squaredNorm();
        rep.trace.push_back({iter, objective, g_norm, rc.mu, alpha_prox, dw2,
                             rep.trace.empty() ? objective : prev_objective, since(start)});
        prev_objective = objective;
        ++iter;
        if (exceeds(w_tilde.tail(q), s.gamma_max)) {
            gamma_hit = true;
            break;
        }
    }
    rep.termination = gamma_hit                       ? Termination::gamma_max_exceeded
                      : (g_norm <= cfg.tol || !progress) ? Termination::converged
                                                         : Termination::max_iter;
    finish(rep, w_tilde, it.state.point(), p, start);
    return rep;
}

SolveReport run_algorithm(Algorithm algo, const LMEProblem& problem, const Regularizer& reg,
                          const SolverConfig& cfg) {
    switch (algo) {
    case Algorithm::pgd: return pgd_naive(problem, reg, cfg);
    case Algorithm::pgd_value: return pgd_value(problem, reg, cfg);
    case Algorithm::msr3: return msr3(problem, reg, cfg);
    case Algorithm::msr3_fast: return msr3_fast(problem, reg, cfg);
    }
    throw ValidationError("unknown algorithm");
}

} // namespace lmesel
