#include <cmath>
#include <random>

#include <doctest.h>

#include "lmesel/error.hpp"
#include "lmesel/oracles.hpp"
#include "lmesel/regularizers.hpp"

using namespace lmesel;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
    VectorXd v(static_cast<Index>(xs.size()));
    Index k = 0;
    for (double x : xs) v(k++) = x;
    return v;
}

double prox_scalar(RegKind kind, double lambda, double x, double t = 1.0, bool nonneg = false) {
    return scalar_prox(kind, lambda, 3.7, x, t, nonneg);
}

} // namespace

TEST_CASE("penalty values") {
    Regularizer l1{RegKind::l1, 2.0};
    CHECK(penalty(l1, vec({1.0, -3.0})) == doctest::Approx(8.0));
    Regularizer l0{RegKind::l0, 1.0};
    CHECK(penalty(l0, vec({0.0, 0.5, 0.0})) == doctest::Approx(1.0));
    Regularizer scad{RegKind::scad, 1.0};
    CHECK(penalty(scad, vec({0.5})) == doctest::Approx(0.5));
    // flat zone: lambda^2 (a + 1) / 2
    CHECK(penalty(scad, vec({10.0})) == doctest::Approx(4.7 / 2.0));
    Regularizer al{RegKind::alasso, 1.0, vec({2.0, 0.5})};
    CHECK(penalty(al, vec({1.0, -2.0})) == doctest::Approx(3.0));
    // negative entry in the nonneg tail is infeasible
    CHECK(std::isinf(penalty(l1, vec({1.0, -1.0}), 1)));
}

TEST_CASE("prox closed forms") {
    CHECK(prox_scalar(RegKind::l1, 1.0, 2.0) == doctest::Approx(1.0));
    CHECK(prox_scalar(RegKind::l1, 1.0, 0.5) == 0.0);
    CHECK(prox_scalar(RegKind::l1, 1.0, -3.0) == doctest::Approx(-2.0));
    CHECK(prox_scalar(RegKind::l0, 2.0, 1.9) == 0.0);
    CHECK(prox_scalar(RegKind::l0, 2.0, 2.1) == doctest::Approx(2.1));
    CHECK(prox_scalar(RegKind::l1, 1.0, -3.0, 1.0, true) == 0.0);
    CHECK(prox_scalar(RegKind::l0, 0.0, -0.3, 1.0, true) == 0.0);
    for (RegKind k : {RegKind::l0, RegKind::l1, RegKind::alasso, RegKind::scad})
        CHECK(prox_scalar(k, 0.0, -1.7) == doctest::Approx(-1.7));
}

TEST_CASE("SCAD prox matches a grid in each zone") {
    for (double x : {0.5, 1.5, 5.0, -2.2, 3.0}) {
        auto obj = [&](double w) { return 0.5 * (w - x) * (w - x) + scalar_penalty(RegKind::scad, 1.0, 3.7, w); };
        const auto g = oracles::scalar_grid(obj, -10.0, 10.0, 1e-4);
        CHECK(prox_scalar(RegKind::scad, 1.0, x) == doctest::Approx(g.argmin(0)).epsilon(0).scale(1).epsilon(1e-3));
    }
}

TEST_CASE("random prox problems never lose to a grid") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> ux(-6.0, 6.0), ul(0.01, 3.0), ut(0.1, 2.0);
    for (RegKind kind : {RegKind::l0, RegKind::l1, RegKind::alasso, RegKind::scad}) {
        for (bool nonneg : {false, true}) {
            for (int rep = 0; rep < 40; ++rep) {
                const double x = ux(rng), lam = ul(rng), t = ut(rng);
                auto obj = [&](double w) {
                    if (nonneg && w < 0.0) return std::numeric_limits<double>::infinity();
                    return 0.5 * (w - x) * (w - x) + t * scalar_penalty(kind, lam, 3.7, w);
                };
                const double w = scalar_prox(kind, lam, 3.7, x, t, nonneg);
                const auto g = oracles::scalar_grid(obj, nonneg ? 0.0 : -10.0, 10.0, 1e-3);
                CHECK(obj(g.argmin(0)) - obj(w) >= -1e-8);
            }
        }
    }
}

TEST_CASE("vector prox respects weights, fixed entries and the nonneg tail") {
    Regularizer al{RegKind::alasso, 1.0, vec({2.0, 0.0, 1.0})};
    ProxRequest req{vec({3.0, 0.5, -0.5}), 1.0, 0};
    const VectorXd w = prox(al, req);
    CHECK(w(0) == doctest::Approx(1.0));
    CHECK(w(1) == doctest::Approx(0.5));
    CHECK(w(2) == 0.0);

    Regularizer l1{RegKind::l1, 10.0};
    l1.fixed_mask = {true, false, false};
    const VectorXd z = prox(l1, {vec({3.0, 5.0, -2.0}), 1.0, 1});
    CHECK(z(0) == doctest::Approx(3.0));
    CHECK(z(1) == 0.0);
    CHECK(z(2) == 0.0);
}

TEST_CASE("select_mask and L1 threshold rule") {
    const auto m = select_mask(vec({0.0, 1e-9, 0.3}), 1e-6);
    CHECK(m == std::vector<bool>{false, false, true});
    CHECK(select_mask(VectorXd::Zero(4)) == std::vector<bool>(4, false));

    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    const VectorXd x = VectorXd::NullaryExpr(50, [&] { return 2.0 * nd(rng); });
    const VectorXd w = prox(Regularizer{RegKind::l1, 0.8}, {x, 1.5, 0});
    const auto mask = select_mask(w);
    for (Index j = 0; j < x.size(); ++j) CHECK(mask[static_cast<std::size_t>(j)] == (std::abs(x(j)) > 1.2));
}

TEST_CASE("alasso weights and validation") {
    const VectorXd w = alasso_weights(vec({2.0, -0.5, 0.0}));
    CHECK(w(0) == doctest::Approx(0.5));
    CHECK(w(1) == doctest::Approx(2.0));
    CHECK(w(2) == doctest::Approx(1e6));

    CHECK_THROWS_AS(Regularizer({RegKind::l1, -1.0}).validate(3), ValidationError);
    CHECK_THROWS_AS(Regularizer({RegKind::alasso, 1.0, vec({1.0})}).validate(3), ValidationError);
    Regularizer scad{RegKind::scad, 1.0};
    scad.scad_a = 1.5;
    CHECK_THROWS_AS(scad.validate(2), ValidationError);
    CHECK_THROWS_AS(prox(Regularizer{RegKind::l1, 1.0}, {vec({1.0}), 0.0, 0}), ValidationError);
    CHECK(parse_reg_kind("SCAD") == RegKind::scad);
    CHECK_THROWS_AS(parse_reg_kind("ridge"), ValidationError);
}
