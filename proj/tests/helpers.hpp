#pragma once

#include <random>

#include "lmesel/likelihood.hpp"

namespace lmesel::test {

/// One group, n = p = q = 1, X = Z = Lambda = 1.
inline LMEProblem scalar_problem(double y) {
    GroupBlock g;
    g.X = MatrixXd::Ones(1, 1);
    g.Z = MatrixXd::Ones(1, 1);
    g.y = VectorXd::Constant(1, y);
    g.Lambda = MatrixXd::Identity(1, 1);
    return LMEProblem({g});
}

inline ParamPoint point(std::initializer_list<double> beta, std::initializer_list<double> gamma) {
    ParamPoint pt{VectorXd(static_cast<Index>(beta.size())), VectorXd(static_cast<Index>(gamma.size()))};
    Index k = 0;
    for (double b : beta) pt.beta(k++) = b;
    k = 0;
    for (double g : gamma) pt.gamma(k++) = g;
    return pt;
}

/// Small problem with p = q = 2 and a few groups, fixed seed.
inline LMEProblem small_problem(std::uint64_t seed, Index p = 2, Index q = 2, Index groups = 3, Index n = 6) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    std::vector<GroupBlock> blocks;
    for (Index i = 0; i < groups; ++i) {
        GroupBlock g;
        g.X = MatrixXd::NullaryExpr(n, p, [&] { return nd(rng); });
        g.Z = MatrixXd::NullaryExpr(n, q, [&] { return nd(rng); });
        VectorXd beta = VectorXd::LinSpaced(p, 1.0, 2.0);
        VectorXd u = VectorXd::NullaryExpr(q, [&] { return 0.8 * nd(rng); });
        g.y = g.X * beta + g.Z * u + VectorXd::NullaryExpr(n, [&] { return 0.5 * nd(rng); });
        g.Lambda = 0.25 * MatrixXd::Identity(n, n);
        blocks.push_back(std::move(g));
    }
    return LMEProblem(std::move(blocks));
}

} // namespace lmesel::test
