#include "lmesel/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lmesel/oracles.hpp"

namespace lmesel {

double bic(const LMEProblem& problem, const SolveReport& report) {
    const ParamPoint sparse = report.sparse_point();
    const auto k = (sparse.beta.array() != 0.0).count() + (sparse.gamma.array() != 0.0).count();
    return 2.0 * neg_loglik(problem, sparse) + static_cast<double>(k) * std::log(static_cast<double>(problem.n()));
}

EtaSelection select_eta(const LMEProblem& problem, const Regularizer& reg, const std::vector<double>& eta_grid,
                        const SolverConfig& cfg) {
    if (eta_grid.empty()) throw ValidationError("eta grid is empty");
    for (double eta : eta_grid)
        if (!(eta > 0.0)) throw ValidationError("eta grid values must be positive");

    EtaSelection out;
    out.scores.resize(eta_grid.size());
    std::string failures;
    for (std::size_t k = 0; k < eta_grid.size(); ++k) {
        EtaScore& s = out.scores[k];
        s.eta = eta_grid[k];
        SolverConfig c = cfg;
        c.eta = s.eta;
        try {
            s.report = msr3_fast(problem, reg, c);
            if (s.report.termination == Termination::gamma_max_exceeded) {
                s.error = "gamma_max exceeded";
            } else {
                s.bic = bic(problem, s.report);
                s.ok = std::isfinite(s.bic);
                if (!s.ok) s.error = "non-finite BIC";
            }
        } catch (const Error& e) {
            s.error = e.what();
        }
        if (!s.ok) failures += "\n  eta=" + std::to_string(s.eta) + ": " + s.error;
    }

    std::vector<std::size_t> order(eta_grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return eta_grid[a] < eta_grid[b]; });
    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t k : order) {
        const EtaScore& s = out.scores[k];
        if (s.ok && s.bic < best) {
            best = s.bic;
            out.eta_best = s.eta;
            found = true;
        }
    }
    if (!found) throw ConvergenceError("select_eta: every grid point failed:" + failures);
    return out;
}

ConsistencyTable consistency_probe(const LMEProblem& problem, const Regularizer& reg,
                                   const std::vector<double>& eta_sequence, const std::vector<double>& mu_sequence,
                                   const SolverConfig& cfg, double mu_eta, double eta_mu) {
    if (problem.p() != 1 || problem.q() != 1) throw ValidationError("consistency_probe needs p = q = 1");
    for (std::size_t k = 1; k < eta_sequence.size(); ++k)
        if (!(eta_sequence[k] > eta_sequence[k - 1])) throw ValidationError("eta sequence must increase");
    for (std::size_t k = 1; k < mu_sequence.size(); ++k)
        if (!(mu_sequence[k] < mu_sequence[k - 1])) throw ValidationError("mu sequence must decrease");

    ConsistencyTable table;
    for (double eta : eta_sequence) {
        SolverConfig c = cfg;
        c.eta = eta;
        c.mu = mu_eta;
        const SolveReport rep = pgd_value(problem, reg, c);
        const VectorXd x = ParamPoint{rep.beta_hat, rep.gamma_hat}.stacked();
        table.eta_rows.push_back({eta, (x - rep.sparse_point().stacked()).norm()});
    }

    const double eta = eta_mu > 0.0 ? eta_mu : 1e3 * std::max(eta_bar(problem), 1.0);
    for (double mu : mu_sequence) {
        SolverConfig c = cfg;
        c.eta = eta;
        c.mu = mu;
        if (!c.backtracking.t0) c.backtracking.t0 = 1.0;
        const SolveReport rep = pgd_value(problem, reg, c);
        table.mu_rows.push_back({mu, 0.0, rep.sparse_point()});
    }
    if (table.mu_rows.empty()) return table;

    const VectorXd last = table.mu_rows.back().sparse.stacked();
    const double rb = 5.0 * (1.0 + std::abs(last(0)));
    const double rg = 5.0 * (1.0 + std::abs(last(1)));
    oracles::Box box{VectorXd(2), VectorXd(2)};
    box.lo << last(0) - rb, 0.0;
    box.hi << last(0) + rb, last(1) + rg;
    const auto objective = [&](const VectorXd& w) {
        return neg_loglik(problem, ParamPoint::split(w, 1)) + penalty(reg, w, 1);
    };
    const oracles::GridResult ref = oracles::grid_minimize(objective, box, 201, 1e-7);
    table.reference = ParamPoint::split(ref.argmin, 1);
    for (auto& row : table.mu_rows) row.distance = (row.sparse.stacked() - ref.argmin).norm();
    return table;
}

} // namespace lmesel
