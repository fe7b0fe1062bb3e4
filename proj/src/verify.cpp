#include "lmesel/verify.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "lmesel/oracles.hpp"
#include "lmesel/selection.hpp"
#include "lmesel/simulator.hpp"

namespace lmesel::verify {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

Index uniform_index(std::mt19937_64& rng, Index lo, Index hi) {
    return std::uniform_int_distribution<Index>(lo, hi)(rng);
}

MatrixXd normal_matrix(std::mt19937_64& rng, Index r, Index c) {
    std::normal_distribution<double> n;
    MatrixXd a(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) a(i, j) = n(rng);
    return a;
}

std::string fmt(double x) {
    std::ostringstream s;
    s.precision(3);
    s << x;
    return s.str();
}

SuiteResult finish(SuiteResult r, Clock::time_point start) {
    r.seconds = since(start);
    return r;
}

} // namespace

LMEProblem random_problem(std::mt19937_64& rng, const InstanceShape& shape) {
    const Index p = uniform_index(rng, 1, shape.p_max);
    const Index q = uniform_index(rng, 1, shape.q_max);
    const Index m = uniform_index(rng, 1, shape.groups_max);
    std::uniform_real_distribution<double> diag(0.2, 1.0);
    std::vector<GroupBlock> groups;
    for (Index i = 0; i < m; ++i) {
        const Index n = uniform_index(rng, 1, shape.group_size_max);
        GroupBlock g;
        g.X = normal_matrix(rng, n, p);
        g.Z = normal_matrix(rng, n, q);
        g.y = normal_matrix(rng, n, 1).col(0) * 2.0;
        const MatrixXd a = normal_matrix(rng, n, n);
        g.Lambda = a * a.transpose() / static_cast<double>(n) * 0.3;
        g.Lambda.diagonal().array() += diag(rng);
        groups.push_back(std::move(g));
    }
    return LMEProblem(std::move(groups));
}

ParamPoint random_point(std::mt19937_64& rng, Index p, Index q, double gamma_lo, double gamma_hi) {
    std::uniform_real_distribution<double> u(gamma_lo, gamma_hi);
    ParamPoint x{normal_matrix(rng, p, 1).col(0), VectorXd(q)};
    for (Index j = 0; j < q; ++j) x.gamma(j) = u(rng);
    return x;
}

SuiteResult derivative_suite(const DerivativeOptions& opts, const Faults& faults) {
    const auto start = Clock::now();
    SuiteResult res{"derivatives", true, "", json::object(), 0.0};
    std::mt19937_64 rng(opts.seed);
    double worst_grad = 0.0;
    double worst_hess = 0.0;
    for (int k = 0; k < opts.instances; ++k) {
        const LMEProblem prob = random_problem(rng);
        const ParamPoint x = random_point(rng, prob.p(), prob.q());
        const Index p = prob.p();
        const auto value = [&](const VectorXd& w) { return neg_loglik(prob, ParamPoint::split(w, p)); };
        const auto gradient = [&](const VectorXd& w) {
            VectorXd g = grad(prob, ParamPoint::split(w, p));
            if (faults.corrupt_gradient) g(0) += 1e-3;
            return g;
        };
        const VectorXd w = x.stacked();
        const double eg = oracles::rel_error(gradient(w), oracles::fd_gradient(value, w));
        const double eh = oracles::rel_error(hess(prob, x), oracles::fd_jacobian(gradient, w));
        worst_grad = std::max(worst_grad, eg);
        worst_hess = std::max(worst_hess, eh);
    }
    res.passed = worst_grad < opts.grad_tol && worst_hess < opts.hess_tol;
    res.metrics = {{"instances", opts.instances}, {"worst_grad_rel_err", worst_grad}, {"worst_hess_rel_err", worst_hess},
                   {"grad_tol", opts.grad_tol}, {"hess_tol", opts.hess_tol}};
    res.summary = std::to_string(opts.instances) + " instances, worst gradient rel err " + fmt(worst_grad) +
                  ", worst Hessian rel err " + fmt(worst_hess);
    return finish(res, start);
}

SuiteResult group_bound_suite(bool stated, const DerivativeOptions& opts, double slack) {
    const auto start = Clock::now();
    SuiteResult res{stated ? "group_bound_stated" : "group_bound", true, "", json::object(), 0.0};
    std::mt19937_64 rng(opts.seed);
    int checks = 0;
    int violations = 0;
    double worst = -std::numeric_limits<double>::infinity();  // max of bound - f
    for (int k = 0; k < opts.instances; ++k) {
        const LMEProblem prob = random_problem(rng);
        const ParamPoint x = random_point(rng, prob.p(), prob.q());
        for (Index i = 0; i < prob.m(); ++i) {
            const auto& g = prob.group(i);
            const VectorXd r = g.X * x.beta - g.y;
            const MatrixXd om = omega(prob, i, x.gamma);
            const double f = group_term(r, om);
            const double bound = stated ? group_term_lower_bound(r, om) : group_term_lower_bound_valid(r, om);
            ++checks;
            worst = std::max(worst, bound - f);
            if (bound > f + slack) ++violations;
        }
    }
    res.passed = violations == 0;
    res.metrics = {{"checks", checks}, {"violations", violations}, {"max_bound_minus_f", worst}, {"slack", slack}};
    res.summary = std::to_string(violations) + " violations in " + std::to_string(checks) +
                  " per-group evaluations, max(bound - f) = " + fmt(worst);
    return finish(res, start);
}

SuiteResult value_gradient_suite(const ValueGradientOptions& opts) {
    const auto start = Clock::now();
    SuiteResult res{"value_gradient", true, "", json::object(), 0.0};
    std::mt19937_64 rng(opts.seed);
    const double factors[] = {2.0, 10.0};
    const double mus[] = {1e-2, 1e-4};
    const InstanceShape shape{3, 3, 3, 5};
    const InnerOptions io{opts.inner_tol, 200, false};
    double worst = 0.0;
    int failures = 0;
    json rows = json::array();
    for (int k = 0; k < opts.combos; ++k) {
        const LMEProblem prob = random_problem(rng, shape);
        const ParamPoint outer = random_point(rng, prob.p(), prob.q(), 0.2, 1.5);
        const RelaxConfig rc{factors[k % 2] * eta_bar(prob), mus[(k / 2) % 2]};
        const Index p = prob.p();
        try {
            const ValueEval e = eval_value_function(prob, outer, rc, io);
            const KKTState warm = e.state();
            const auto u = [&](const VectorXd& w) {
                return eval_value_function(prob, ParamPoint::split(w, p), rc, io, &warm).value;
            };
            const double err = oracles::rel_error(e.gradient, oracles::fd_gradient(u, outer.stacked(), 1e-6));
            worst = std::max(worst, err);
            rows.push_back({{"eta", rc.eta}, {"mu", rc.mu}, {"rel_err", err}});
        } catch (const Error& ex) {
            ++failures;
            rows.push_back({{"eta", rc.eta}, {"mu", rc.mu}, {"error", ex.what()}});
        }
    }
    res.passed = failures == 0 && worst < opts.tol;
    res.metrics = {{"combos", opts.combos}, {"worst_rel_err", worst}, {"failures", failures}, {"tol", opts.tol},
                   {"rows", rows}};
    res.summary = std::to_string(opts.combos) + " combinations, worst rel err " + fmt(worst) +
                  (failures ? ", " + std::to_string(failures) + " inner failures" : "");
    return finish(res, start);
}

SuiteResult spectral_suite(const SpectralOptions& opts) {
    const auto start = Clock::now();
    SuiteResult res{"spectral", true, "", json::object(), 0.0};
    std::mt19937_64 rng(opts.seed);
    double worst_margin = std::numeric_limits<double>::infinity();  // min over points of eig_min / eta_bar
    for (int k = 0; k < opts.instances; ++k) {
        const LMEProblem prob = random_problem(rng);
        const double eb = eta_bar(prob);
        const double eta = opts.factor * eb;
        for (int s = 0; s < opts.points; ++s) {
            const ParamPoint x = random_point(rng, prob.p(), prob.q(), 1e-6, 3.0);
            MatrixXd h = hess(prob, x);
            h.diagonal().array() += eta;
            const double lo = Eigen::SelfAdjointEigenSolver<MatrixXd>(h, Eigen::EigenvaluesOnly).eigenvalues()(0);
            worst_margin = std::min(worst_margin, (lo + 1e-8) / eb);
        }
    }
    const double required = opts.factor - 1.01;
    const bool bound_ok = worst_margin >= required;

    // one observation, Z = X = 1, Lambda = 1: at beta = y the gamma-gamma
    // curvature is -1/2 (1 + gamma)^-2 and eta_bar = 1/2
    GroupBlock g{MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), VectorXd::Constant(1, 0.7), MatrixXd::Ones(1, 1)};
    const LMEProblem adv({g});
    const double eb = eta_bar(adv);
    double most_negative = std::numeric_limits<double>::infinity();
    std::uniform_real_distribution<double> gam(1e-6, 0.05);
    std::normal_distribution<double> jitter(0.0, 0.01);
    for (int s = 0; s < opts.points; ++s) {
        const ParamPoint x{VectorXd::Constant(1, 0.7 + jitter(rng)), VectorXd::Constant(1, gam(rng))};
        MatrixXd h = hess(adv, x);
        h.diagonal().array() += 0.5 * eb;
        const double lo = Eigen::SelfAdjointEigenSolver<MatrixXd>(h, Eigen::EigenvaluesOnly).eigenvalues()(0);
        most_negative = std::min(most_negative, lo);
    }
    const bool adversarial_ok = most_negative < 0.0;
    res.passed = bound_ok && adversarial_ok;
    res.metrics = {{"instances", opts.instances}, {"points", opts.points}, {"eta_factor", opts.factor},
                   {"min_eig_over_eta_bar", worst_margin}, {"required", required},
                   {"adversarial_eta_bar", eb}, {"adversarial_min_eig", most_negative}};
    res.summary = "min eig / eta_bar = " + fmt(worst_margin) + " (need >= " + fmt(required) +
                  "), adversarial min eig at eta_bar/2 = " + fmt(most_negative);
    return finish(res, start);
}

SuiteResult prox_suite(const ProxOptions& opts) {
    const auto start = Clock::now();
    SuiteResult res{"prox", true, "", json::object(), 0.0};
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> ux(-5.0, 5.0), ut(0.1, 2.0), ul(0.05, 2.0), ua(0.2, 3.0);
    json per_kind = json::object();
    for (RegKind kind : {RegKind::l0, RegKind::l1, RegKind::alasso, RegKind::scad}) {
        for (bool nonneg : {false, true}) {
            double worst = std::numeric_limits<double>::infinity();
            for (int k = 0; k < opts.problems; ++k) {
                const double x = ux(rng);
                const double t = ut(rng);
                double lambda = ul(rng);
                if (kind == RegKind::alasso) lambda *= ua(rng);
                const double a = 3.7;
                const auto h = [&](double w) { return t * scalar_penalty(kind, lambda, a, w) + 0.5 * (w - x) * (w - x); };
                const double w = scalar_prox(kind, lambda, a, x, t, nonneg);
                const double lo = nonneg ? 0.0 : std::min(0.0, x) - 0.5;
                const double hi = std::max(0.0, x) + 0.5;
                double best = oracles::scalar_grid(h, lo, hi, opts.spacing).value;
                best = std::min(best, h(0.0));
                if (nonneg && w < 0.0) best = -std::numeric_limits<double>::infinity();
                worst = std::min(worst, best - h(w));
            }
            per_kind[to_string(kind) + (nonneg ? "_nonneg" : "")] = worst;
            if (!(worst >= opts.margin)) res.passed = false;
        }
    }
    res.metrics = {{"problems_per_variant", opts.problems}, {"min_margin", per_kind}, {"required", opts.margin}};
    double overall = std::numeric_limits<double>::infinity();
    for (const auto& [k, v] : per_kind.items()) overall = std::min(overall, v.get<double>());
    res.summary = "8 variants x " + std::to_string(opts.problems) + " problems, min(grid - prox) = " + fmt(overall);
    return finish(res, start);
}

SuiteResult consistency_suite(const ConsistencyOptions& opts) {
    const auto start = Clock::now();
    SuiteResult res{"consistency", true, "", json::object(), 0.0};
    SimConfig sim;
    sim.p = sim.q = 1;
    sim.beta_true = VectorXd::Constant(1, 1.0);
    sim.gamma_true = VectorXd::Constant(1, 0.8);
    sim.group_sizes = {6, 4, 8, 5, 7, 3};
    sim.noise_std = 0.3;
    sim.seed = opts.seed;
    const auto [prob, truth] = generate(sim);
    const Regularizer reg{RegKind::l1, 0.5, {}, 3.7, {}};
    const double eb = eta_bar(prob);
    std::vector<double> etas;
    for (double f : {2.0, 4.0, 8.0, 16.0, 32.0}) etas.push_back(f * eb);
    const std::vector<double> mus{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};

    SolverConfig cfg;
    cfg.tol = 1e-12;
    cfg.max_iter = 20000;
    cfg.inner_tol = 1e-6;
    cfg.max_iter_inner = 200;
    cfg.use_psd_approx = false;
    cfg.backtracking.t0 = 1.0;
    try {
        const ConsistencyTable table = consistency_probe(prob, reg, etas, mus, cfg, 1e-4, 1e3 * eb);
        bool monotone = true;
        json eta_rows = json::array();
        for (std::size_t k = 0; k < table.eta_rows.size(); ++k) {
            const auto& r = table.eta_rows[k];
            eta_rows.push_back({{"eta", r.eta}, {"gap", r.gap}});
            if (k > 0 && r.gap > table.eta_rows[k - 1].gap * (1.0 + opts.gap_slack)) monotone = false;
        }
        json mu_rows = json::array();
        for (const auto& r : table.mu_rows) mu_rows.push_back({{"mu", r.mu}, {"distance", r.distance}});
        const double last = table.mu_rows.back().distance;
        res.passed = monotone && last < opts.mu_distance;
        res.metrics = {{"eta_bar", eb}, {"eta_table", eta_rows}, {"mu_table", mu_rows},
                       {"reference", {table.reference.beta(0), table.reference.gamma(0)}},
                       {"gap_nonincreasing", monotone}, {"final_mu_distance", last}};
        res.summary = std::string("gap ") + (monotone ? "nonincreasing" : "NOT nonincreasing") + " over " +
                      std::to_string(etas.size()) + " etas (" + fmt(table.eta_rows.front().gap) + " -> " +
                      fmt(table.eta_rows.back().gap) + "), distance at mu=1e-5 " + fmt(last);
    } catch (const Error& e) {
        res.passed = false;
        res.summary = std::string("probe failed: ") + e.what();
    }
    return finish(res, start);
}

TraceCheck check_backtracking_trace(const SolveReport& report, double t0, double tau) {
    TraceCheck c;
    const auto& tr = report.trace;
    if (tr.size() < 2) return c;
    double t_min = std::numeric_limits<double>::infinity();
    double min_res = std::numeric_limits<double>::infinity();
    std::vector<double> shape;
    for (std::size_t k = 1; k < tr.size(); ++k) {
        const TraceRow& row = tr[k];
        ++c.steps;
        const double excess = row.objective - (row.prev_objective - tau * row.step * row.step_norm_sq);
        if (excess > 0.0) {
            c.decrease_ok = false;
            c.worst_decrease_violation = std::max(c.worst_decrease_violation, excess);
        }
        t_min = std::min(t_min, row.step);
        min_res = std::min(min_res, row.residual);
        shape.push_back(min_res * std::sqrt(static_cast<double>(k)));
    }
    const double drop = std::max(tr[0].objective - tr.back().objective, 0.0);
    c.rate_bound = t0 * std::sqrt(drop / (tau * t_min * t_min * t_min));
    for (double s : shape) c.rate_max = std::max(c.rate_max, s);
    c.rate_ok = c.rate_max <= c.rate_bound * (1.0 + 1e-9) + 1e-12;
    return c;
}

SuiteResult trace_suite(const TraceOptions& opts) {
    const auto start = Clock::now();
    SuiteResult res{"traces", true, "", json::object(), 0.0};
    json runs = json::array();
    int steps = 0;
    for (int s = 1; s <= opts.seeds; ++s) {
        SimConfig sim = default_sim_config();
        sim.seed = static_cast<std::uint64_t>(s);
        const auto [prob, truth] = generate(sim);
        for (double lambda : opts.lambdas) {
            SolverConfig cfg;
            cfg.eta = opts.eta;
            cfg.max_iter = 300;
            cfg.max_iter_inner = 500;
            const Regularizer reg{RegKind::l1, lambda, {}, 3.7, {}};
            try {
                const SolveReport rep = pgd_value(prob, reg, cfg);
                const double t0 = cfg.backtracking.t0.value_or(1.0 / cfg.eta);
                const TraceCheck c = check_backtracking_trace(rep, t0, cfg.backtracking.tau);
                steps += c.steps;
                if (!c.decrease_ok || !c.rate_ok) res.passed = false;
                runs.push_back({{"seed", s}, {"lambda", lambda}, {"steps", c.steps}, {"decrease_ok", c.decrease_ok},
                                {"rate_ok", c.rate_ok}, {"rate_max", c.rate_max}, {"rate_bound", c.rate_bound},
                                {"termination", to_string(rep.termination)}});
            } catch (const Error& e) {
                res.passed = false;
                runs.push_back({{"seed", s}, {"lambda", lambda}, {"error", e.what()}});
            }
        }
    }
    res.metrics = {{"runs", runs}, {"steps", steps}};
    res.summary = std::to_string(runs.size()) + " backtracking runs, " + std::to_string(steps) + " accepted steps";
    return finish(res, start);
}

SuiteResult parallel_suite(std::uint64_t seed) {
    const auto start = Clock::now();
    SuiteResult res{"parallel", true, "", json::object(), 0.0};
    std::mt19937_64 rng(seed);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const LMEProblem prob = random_problem(rng, {4, 4, 12, 8});
        const ParamPoint x = random_point(rng, prob.p(), prob.q());
        const LikelihoodEval a = evaluate(prob, x, Order::hessian, Curvature::exact, Execution::serial);
        const LikelihoodEval b = evaluate(prob, x, Order::hessian, Curvature::exact, Execution::parallel);
        worst = std::max({worst, std::abs(a.value - b.value) / std::max(1.0, std::abs(a.value)),
                          oracles::rel_error(b.gradient, a.gradient, 1.0), oracles::rel_error(b.hessian, a.hessian, 1.0)});
    }
    res.passed = worst < 1e-12;
    res.metrics = {{"worst_rel_diff", worst}};
    res.summary = "serial vs parallel kernels, worst rel diff " + fmt(worst);
    return finish(res, start);
}

bool Report::passed() const {
    for (const auto& s : suites)
        if (!s.passed) return false;
    return true;
}

json Report::to_json() const {
    json out = json::array();
    for (const auto& s : suites)
        out.push_back({{"suite", s.name}, {"passed", s.passed}, {"summary", s.summary}, {"seconds", s.seconds},
                       {"metrics", s.metrics}});
    return json{{"passed", passed()}, {"suites", out}};
}

Report run(bool full, const Faults& faults) {
    Report r;
    r.suites.push_back(derivative_suite({}, faults));
    r.suites.push_back(group_bound_suite(false));
    r.suites.push_back(value_gradient_suite());
    r.suites.push_back(spectral_suite());
    r.suites.push_back(prox_suite());
    r.suites.push_back(parallel_suite());
    if (full) {
        r.suites.push_back(consistency_suite());
        r.suites.push_back(trace_suite());
    }
    return r;
}

} // namespace lmesel::verify
