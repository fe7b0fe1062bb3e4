#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "lmesel/selection.hpp"

using namespace lmesel;

namespace {

const LMEProblem& problem() {
    static const LMEProblem prob = test::small_problem(5, 2, 2, 5, 6);
    return prob;
}

} // namespace

TEST_CASE("bic counts nonzeros of the sparse point") {
    SolveReport rep;
    rep.beta_tilde = VectorXd::Zero(2);
    rep.gamma_tilde = VectorXd::Zero(2);
    rep.beta_tilde(1) = 1.5;
    rep.gamma_tilde(0) = 0.3;
    const double want = 2.0 * neg_loglik(problem(), rep.sparse_point()) + 2.0 * std::log(30.0);
    CHECK(bic(problem(), rep) == doctest::Approx(want));
}

TEST_CASE("single grid point") {
    const EtaSelection sel = select_eta(problem(), Regularizer{RegKind::l1, 0.1}, {3.0}, SolverConfig{});
    CHECK(sel.eta_best == 3.0);
    REQUIRE(sel.scores.size() == 1);
    CHECK(sel.scores[0].ok);
}

TEST_CASE("ties go to the smaller eta") {
    // everything is zeroed, so every eta gives the same fit
    const EtaSelection sel = select_eta(problem(), Regularizer{RegKind::l1, 1e6}, {10.0, 1.0, 3.0}, SolverConfig{});
    CHECK(sel.scores[0].bic == sel.scores[1].bic);
    CHECK(sel.eta_best == 1.0);
}

TEST_CASE("every grid point failing is an error") {
    SolverConfig cfg;
    cfg.gamma_max = VectorXd::Constant(1, 0.02);
    cfg.initial = ParamPoint{VectorXd::Zero(2), VectorXd::Constant(2, 0.01)};
    CHECK_THROWS_AS(select_eta(problem(), Regularizer{RegKind::l1, 0.0}, {1.0, 2.0}, cfg), ConvergenceError);
    CHECK_THROWS_AS(select_eta(problem(), Regularizer{RegKind::l1, 0.0}, {}, SolverConfig{}), ValidationError);
    CHECK_THROWS_AS(select_eta(problem(), Regularizer{RegKind::l1, 0.0}, {-1.0}, SolverConfig{}), ValidationError);
}

TEST_CASE("consistency probe needs a scalar problem") {
    CHECK_THROWS_AS(consistency_probe(problem(), Regularizer{}, {1.0}, {1e-2}, SolverConfig{}), ValidationError);
}
