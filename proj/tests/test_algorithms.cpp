#include <cmath>
#include <limits>

#include <doctest.h>

#include "helpers.hpp"
#include "lmesel/algorithms.hpp"
#include "lmesel/oracles.hpp"
#include "lmesel/simulator.hpp"
#include "lmesel/verify.hpp"

using namespace lmesel;

namespace {

const LMEProblem& mle_problem() {
    static const LMEProblem prob = test::small_problem(77, 2, 2, 8, 8);
    return prob;
}

// unpenalized MLE by Nelder-Mead over beta and gamma >= 0
const ParamPoint& mle_oracle() {
    static const ParamPoint x = [] {
        const LMEProblem& prob = mle_problem();
        auto f = [&](const VectorXd& w) {
            const ParamPoint pt = ParamPoint::split(w, prob.p());
            if (pt.gamma.minCoeff() < 0.0) return std::numeric_limits<double>::infinity();
            return neg_loglik(prob, pt);
        };
        VectorXd x0(prob.p() + prob.q());
        x0.setOnes();
        oracles::GridResult r = oracles::nelder_mead(f, x0, 0.5, 200000, 1e-15);
        r = oracles::nelder_mead(f, r.argmin, 0.05, 200000, 1e-16);
        return ParamPoint::split(r.argmin, prob.p());
    }();
    return x;
}

SolverConfig tight() {
    SolverConfig cfg;
    cfg.tol = 1e-9;
    cfg.max_iter = 20000;
    cfg.max_iter_inner = 200;
    return cfg;
}

double param_distance(const SolveReport& rep, const ParamPoint& ref) {
    return (rep.sparse_point().stacked() - ref.stacked()).cwiseAbs().maxCoeff();
}

LMEProblem tiny_sim() {
    SimConfig sim;
    sim.p = 1;
    sim.q = 1;
    sim.beta_true = VectorXd::Constant(1, 1.0);
    sim.gamma_true = VectorXd::Constant(1, 0.8);
    sim.group_sizes = {6, 4, 8, 5, 7, 3};
    sim.seed = 3;
    return generate(sim).first;
}

} // namespace

TEST_CASE("oracle MLE is interior") {
    CHECK(mle_oracle().gamma.minCoeff() > 0.05);
    CHECK(grad(mle_problem(), mle_oracle()).norm() < 1e-5);
}

TEST_CASE("unpenalized fits reach the MLE") {
    const Regularizer none{RegKind::l1, 0.0};
    SUBCASE("pgd") {
        const SolveReport rep = pgd_naive(mle_problem(), none, tight());
        CHECK(rep.termination == Termination::converged);
        CHECK(param_distance(rep, mle_oracle()) < 1e-3);
    }
    SUBCASE("msr3") {
        const SolveReport rep = msr3(mle_problem(), none, tight());
        CHECK(param_distance(rep, mle_oracle()) < 1e-3);
    }
    SUBCASE("msr3_fast") {
        const SolveReport rep = msr3_fast(mle_problem(), none, tight());
        CHECK(param_distance(rep, mle_oracle()) < 1e-3);
    }
}

TEST_CASE("a huge L1 penalty zeroes everything") {
    const Regularizer huge{RegKind::l1, 1e6};
    for (Algorithm a : {Algorithm::pgd, Algorithm::msr3, Algorithm::msr3_fast}) {
        const SolveReport rep = run_algorithm(a, mle_problem(), huge, SolverConfig{});
        CAPTURE(to_string(a));
        CHECK(rep.beta_tilde.cwiseAbs().maxCoeff() == 0.0);
        CHECK(rep.gamma_tilde.cwiseAbs().maxCoeff() == 0.0);
        CHECK(rep.termination == Termination::converged);
    }
}

TEST_CASE("pgd_value from a stationary point stops at once") {
    SolverConfig cfg = tight();
    cfg.mu = 1e-3;
    cfg.eta = 2.0;
    const Regularizer none{RegKind::l1, 0.0};
    const SolveReport first = pgd_value(mle_problem(), none, cfg);
    REQUIRE(first.termination == Termination::converged);
    cfg.initial = first.sparse_point();
    cfg.tol = 1e-6;
    const SolveReport again = pgd_value(mle_problem(), none, cfg);
    CHECK(again.termination == Termination::converged);
    CHECK(again.iterations <= 1);
}

TEST_CASE("pgd_value and msr3_fast on a p = q = 1 instance match a grid of the relaxed objective") {
    const LMEProblem prob = tiny_sim();
    const Regularizer reg{RegKind::l1, 0.5};
    const double eta = 1.0;
    auto oracle = [&](double mu) {
        const RelaxConfig rc{eta, mu};
        InnerOptions opts;
        opts.tol = 1e-9;
        opts.max_iter = 300;
        auto f = [&](const VectorXd& w) {
            if (w(1) < 0.0) return std::numeric_limits<double>::infinity();
            const ParamPoint pt{w.head(1), w.tail(1)};
            double u;
            try {
                u = eval_value_function(prob, pt, rc, opts).value;
            } catch (const InnerConvergenceError& e) {
                u = relaxed_objective(prob, e.best().point(), pt, rc);
            }
            return u + penalty(reg, w, 1);
        };
        VectorXd lo(2), hi(2);
        lo << -1.0, 0.0;
        hi << 3.0, 3.0;
        return oracles::grid_minimize(f, {lo, hi}, 41, 1e-6).argmin;
    };

    SUBCASE("pgd_value") {
        SolverConfig cfg = tight();
        cfg.eta = eta;
        cfg.mu = 1e-3;
        const SolveReport rep = pgd_value(prob, reg, cfg);
        CHECK((rep.sparse_point().stacked() - oracle(1e-3)).cwiseAbs().maxCoeff() < 2e-3);
    }
    SUBCASE("msr3_fast with q = 1 fires the prox every iteration") {
        CHECK(central_path_ok(VectorXd::Constant(1, 0.3), VectorXd::Constant(1, 7.0)));
        SolverConfig cfg = tight();
        cfg.eta = eta;
        cfg.mu_min = 1e-6;
        const SolveReport rep = msr3_fast(prob, reg, cfg);
        CHECK((rep.sparse_point().stacked() - oracle(1e-6)).cwiseAbs().maxCoeff() < 2e-3);
    }
}

TEST_CASE("backtracking pgd_value traces satisfy sufficient decrease") {
    SolverConfig cfg;
    cfg.eta = 1.0;
    cfg.mu = 1e-2;
    cfg.max_iter = 200;
    cfg.backtracking.t0 = 1.0;
    const SolveReport rep = pgd_value(mle_problem(), Regularizer{RegKind::scad, 0.2}, cfg);
    const verify::TraceCheck tc = verify::check_backtracking_trace(rep, 1.0, cfg.backtracking.tau);
    CHECK(tc.steps > 0);
    CHECK(tc.decrease_ok);
    CHECK(tc.rate_ok);
}

TEST_CASE("fixed step pgd") {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(hess_psd_approx(mle_problem(), mle_oracle()));
    const double step = 0.5 / es.eigenvalues().maxCoeff();
    SolverConfig cfg = tight();
    cfg.fixed_step = step;
    const SolveReport rep = pgd_naive(mle_problem(), Regularizer{RegKind::l1, 0.0}, cfg);
    CHECK(param_distance(rep, mle_oracle()) < 1e-3);
    for (std::size_t k = 1; k < rep.trace.size(); ++k) CHECK(rep.trace[k].step == doctest::Approx(step));
}

TEST_CASE("gamma above gamma_max stops the run") {
    SolverConfig cfg;
    cfg.gamma_max = VectorXd::Constant(1, 0.02);
    cfg.initial = ParamPoint{VectorXd::Zero(2), VectorXd::Constant(2, 0.01)};
    for (Algorithm a : {Algorithm::pgd, Algorithm::msr3_fast}) {
        const SolveReport rep = run_algorithm(a, mle_problem(), Regularizer{RegKind::l1, 0.0}, cfg);
        CHECK(rep.termination == Termination::gamma_max_exceeded);
    }
}

TEST_CASE("trace rows are consistent") {
    const SolveReport rep = msr3_fast(mle_problem(), Regularizer{RegKind::l0, 0.1}, SolverConfig{});
    REQUIRE(!rep.trace.empty());
    CHECK(static_cast<int>(rep.trace.size()) >= rep.iterations);
    double last = 0.0;
    for (const auto& row : rep.trace) {
        CHECK(row.seconds >= last);
        CHECK(row.mu >= 1e-9);
        last = row.seconds;
    }
    CHECK(rep.beta_mask.size() == 2);
    CHECK(rep.gamma_mask.size() == 2);
}

TEST_CASE("config validation") {
    const Regularizer reg{RegKind::l1, 0.1};
    SolverConfig bad;
    bad.eta = -1.0;
    CHECK_THROWS_AS(msr3(mle_problem(), reg, bad), ValidationError);
    bad = SolverConfig{};
    bad.backtracking.theta = 1.0;
    CHECK_THROWS_AS(pgd_naive(mle_problem(), reg, bad), ValidationError);
    bad = SolverConfig{};
    bad.initial = ParamPoint{VectorXd::Zero(2), VectorXd::Zero(2)};
    CHECK_THROWS_AS(msr3_fast(mle_problem(), reg, bad), ValidationError);
    bad.initial = ParamPoint{VectorXd::Zero(3), VectorXd::Ones(2)};
    CHECK_THROWS_AS(pgd_naive(mle_problem(), reg, bad), ValidationError);
    CHECK(parse_algorithm("msr3-fast") == Algorithm::msr3_fast);
    CHECK_THROWS_AS(parse_algorithm("adam"), ValidationError);
}

TEST_CASE("default gamma_max") {
    const VectorXd gm = default_gamma_max(mle_problem());
    CHECK(gm.size() == 2);
    CHECK(gm.minCoeff() >= 10.0);
}
