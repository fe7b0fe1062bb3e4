#include "lmesel/likelihood.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <string>

#include <omp.h>

#include "lmesel/error.hpp"

namespace lmesel {

namespace {

VectorXd checked_gamma(const VectorXd& gamma, Index q) {
    if (gamma.size() != q)
        throw ValidationError("gamma has length " + std::to_string(gamma.size()) + ", expected " +
                              std::to_string(q));
    VectorXd out = gamma;
    for (Index j = 0; j < q; ++j) {
        if (!std::isfinite(out(j))) throw ValidationError("gamma has a non-finite entry");
        if (out(j) < 0.0) {
            if (out(j) < -kBoundaryTol) throw ValidationError("gamma must be nonnegative");
            out(j) = 0.0;
        }
    }
    return out;
}

void check_point(const LMEProblem& problem, const ParamPoint& point) {
    if (point.beta.size() != problem.p())
        throw ValidationError("beta has length " + std::to_string(point.beta.size()) + ", expected " +
                              std::to_string(problem.p()));
    if (!point.beta.allFinite()) throw ValidationError("beta has a non-finite entry");
}

MatrixXd assemble_omega(const GroupBlock& g, const VectorXd& gamma) {
    MatrixXd om = g.Lambda;
    om.noalias() += g.Z * gamma.asDiagonal() * g.Z.transpose();
    return om;
}

void accumulate_group(const GroupBlock& g, const VectorXd& beta, const VectorXd& gamma, Order order,
                      Curvature curvature, LikelihoodEval& out) {
    const Index p = g.X.cols();
    const Index q = g.Z.cols();
    const Eigen::LLT<MatrixXd> llt(assemble_omega(g, gamma));
    if (llt.info() != Eigen::Success) throw NumericalError("Cholesky factorization of Omega_i failed");

    const VectorXd r = g.X * beta - g.y;
    const VectorXd oinv_r = llt.solve(r);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    out.value += 0.5 * (r.dot(oinv_r) + logdet);
    if (order == Order::value) return;

    const MatrixXd oinv_z = llt.solve(g.Z);
    const VectorXd a = g.Z.transpose() * oinv_r;
    out.gradient.head(p).noalias() += g.X.transpose() * oinv_r;
    out.gradient.tail(q) +=
        0.5 * (g.Z.cwiseProduct(oinv_z).colwise().sum().transpose() - a.cwiseAbs2());
    if (order == Order::gradient) return;

    const MatrixXd oinv_x = llt.solve(g.X);
    const MatrixXd zt_oinv_z = g.Z.transpose() * oinv_z;
    const MatrixXd xt_oinv_z = g.X.transpose() * oinv_z;
    out.hessian.topLeftCorner(p, p).noalias() += g.X.transpose() * oinv_x;
    const MatrixXd cross = -xt_oinv_z * a.asDiagonal();
    out.hessian.topRightCorner(p, q) += cross;
    out.hessian.bottomLeftCorner(q, p) += cross.transpose();
    MatrixXd gg = (a * a.transpose()).cwiseProduct(zt_oinv_z);
    if (curvature == Curvature::exact) gg -= 0.5 * zt_oinv_z.cwiseAbs2();
    out.hessian.bottomRightCorner(q, q) += gg;
}

LikelihoodEval zero_eval(Index dim, Order order) {
    LikelihoodEval e;
    if (order != Order::value) e.gradient = VectorXd::Zero(dim);
    if (order == Order::hessian) e.hessian = MatrixXd::Zero(dim, dim);
    return e;
}

void add_into(LikelihoodEval& into, const LikelihoodEval& from, Order order) {
    into.value += from.value;
    if (order != Order::value) into.gradient += from.gradient;
    if (order == Order::hessian) into.hessian += from.hessian;
}

} // namespace

MatrixXd omega(const LMEProblem& problem, Index group, const VectorXd& gamma) {
    if (group < 0 || group >= problem.m())
        throw ValidationError("group index " + std::to_string(group) + " out of range");
    return assemble_omega(problem.group(group), checked_gamma(gamma, problem.q()));
}

LikelihoodEval evaluate(const LMEProblem& problem, const ParamPoint& point, Order order,
                        Curvature curvature, Execution exec) {
    check_point(problem, point);
    const VectorXd gamma = checked_gamma(point.gamma, problem.q());
    const Index dim = problem.p() + problem.q();
    LikelihoodEval total = zero_eval(dim, order);

    if (exec == Execution::serial) {
        for (const auto& g : problem.groups()) accumulate_group(g, point.beta, gamma, order, curvature, total);
    } else {
        const auto m = problem.m();
        std::exception_ptr failure;
#pragma omp parallel
        {
            LikelihoodEval local = zero_eval(dim, order);
#pragma omp for schedule(static)
            for (Index i = 0; i < m; ++i) {
                try {
                    accumulate_group(problem.group(i), point.beta, gamma, order, curvature, local);
                } catch (...) {
#pragma omp critical(lmesel_eval_failure)
                    failure = std::current_exception();
                }
            }
#pragma omp critical(lmesel_eval_reduce)
            add_into(total, local, order);
        }
        if (failure) std::rethrow_exception(failure);
    }

    if (order == Order::hessian) {
        const MatrixXd sym = 0.5 * (total.hessian + total.hessian.transpose());
        total.hessian = sym;
    }
    return total;
}

double neg_loglik(const LMEProblem& problem, const ParamPoint& point) {
    return evaluate(problem, point, Order::value).value;
}

VectorXd grad(const LMEProblem& problem, const ParamPoint& point) {
    return evaluate(problem, point, Order::gradient).gradient;
}

MatrixXd hess(const LMEProblem& problem, const ParamPoint& point) {
    return evaluate(problem, point, Order::hessian, Curvature::exact).hessian;
}

MatrixXd hess_psd_approx(const LMEProblem& problem, const ParamPoint& point) {
    return evaluate(problem, point, Order::hessian, Curvature::psd).hessian;
}

double log_barrier(const VectorXd& gamma, double mu) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (mu < 0.0) throw ValidationError("barrier weight mu must be nonnegative");
    if (mu == 0.0) return (gamma.array() >= -kBoundaryTol).all() ? 0.0 : inf;
    if (!(gamma.array() > 0.0).all()) return inf;
    return -mu * (gamma.array() / mu).log().sum();
}

double coupling(const VectorXd& d, double eta) { return 0.5 * eta * d.squaredNorm(); }

double relaxed_objective(const LMEProblem& problem, const ParamPoint& inner, const ParamPoint& outer,
                         const RelaxConfig& cfg) {
    const double barrier = log_barrier(inner.gamma, cfg.mu);
    if (!std::isfinite(barrier)) return barrier;
    return neg_loglik(problem, inner) + barrier + coupling(inner.stacked() - outer.stacked(), cfg.eta);
}

double eta_bar(const LMEProblem& problem) {
    double nu = 0.0;
    for (Index i = 0; i < problem.m(); ++i) {
        const double s = problem.z_sigma_max(i);
        const double l = problem.lambda_min(i);
        nu = std::max(nu, 0.5 * (s * s * s * s) / (l * l));
    }
    return static_cast<double>(problem.m()) * nu;
}

double group_term(const VectorXd& r, const MatrixXd& M) {
    const Eigen::LLT<MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) throw NumericalError("group_term: matrix is not positive definite");
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return 0.5 * (r.dot(llt.solve(r)) + logdet);
}

double group_term_lower_bound(const VectorXd& r, const MatrixXd& M) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    const double mu_min = eig.eigenvalues().minCoeff();
    const double mu_max = eig.eigenvalues().maxCoeff();
    const auto n = static_cast<double>(r.size());
    const double r2 = r.squaredNorm();
    const double first = r2 > 0.0 ? std::log(r2 / n) : -std::numeric_limits<double>::infinity();
    return std::max(first, std::log(mu_max)) + 0.5 * (n - 1.0) * std::log(mu_min);
}

double group_term_lower_bound_valid(const VectorXd& r, const MatrixXd& M) {
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    const double mu_min = eig.eigenvalues().minCoeff();
    const double mu_max = eig.eigenvalues().maxCoeff();
    const auto n = static_cast<double>(r.size());
    const double r2 = r.squaredNorm();
    const double first = r2 > 0.0 ? 1.0 + std::log(r2 / n) : -std::numeric_limits<double>::infinity();
    return 0.5 * std::max(first, std::log(mu_max)) + 0.5 * (n - 1.0) * std::log(mu_min);
}

} // namespace lmesel
