#include "lmesel/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace lmesel::oracles {

VectorXd fd_gradient(const ScalarFn& f, const VectorXd& x, double h) {
    VectorXd g(x.size());
    VectorXd xp = x;
    for (Index j = 0; j < x.size(); ++j) {
        const double step = h * std::max(1.0, std::abs(x(j)));
        xp(j) = x(j) + step;
        const double fp = f(xp);
        xp(j) = x(j) - step;
        const double fm = f(xp);
        xp(j) = x(j);
        g(j) = (fp - fm) / (2.0 * step);
    }
    return g;
}

MatrixXd fd_jacobian(const VectorFn& g, const VectorXd& x, double h) {
    MatrixXd jac;
    VectorXd xp = x;
    for (Index j = 0; j < x.size(); ++j) {
        const double step = h * std::max(1.0, std::abs(x(j)));
        xp(j) = x(j) + step;
        const VectorXd gp = g(xp);
        xp(j) = x(j) - step;
        const VectorXd gm = g(xp);
        xp(j) = x(j);
        if (j == 0) jac.resize(gp.size(), x.size());
        jac.col(j) = (gp - gm) / (2.0 * step);
    }
    return jac;
}

double rel_error(const VectorXd& a, const VectorXd& b, double floor) {
    return (a - b).norm() / std::max(b.norm(), floor);
}

double rel_error(const MatrixXd& a, const MatrixXd& b, double floor) {
    return (a - b).norm() / std::max(b.norm(), floor);
}

namespace {

// visits every node of the tensor grid lo + k * (hi - lo) / (points - 1)
void sweep(const ScalarFn& f, const VectorXd& lo, const VectorXd& hi, int points, GridResult& best) {
    const Index d = lo.size();
    std::vector<int> idx(d, 0);
    VectorXd x(d);
    while (true) {
        for (Index j = 0; j < d; ++j)
            x(j) = points == 1 ? lo(j) : lo(j) + (hi(j) - lo(j)) * idx[j] / static_cast<double>(points - 1);
        const double v = f(x);
        if (v < best.value) {
            best.value = v;
            best.argmin = x;
        }
        Index j = 0;
        while (j < d && ++idx[j] == points) idx[j++] = 0;
        if (j == d) break;
    }
}

} // namespace

GridResult grid_minimize(const ScalarFn& f, const Box& box, int points, double resolution) {
    GridResult best{box.lo, std::numeric_limits<double>::infinity()};
    VectorXd lo = box.lo;
    VectorXd hi = box.hi;
    sweep(f, lo, hi, points, best);
    double width = ((hi - lo) / (points - 1)).maxCoeff();
    while (width > resolution) {
        const VectorXd cell = (hi - lo) / (points - 1);
        lo = (best.argmin - 2.0 * cell).cwiseMax(box.lo);
        hi = (best.argmin + 2.0 * cell).cwiseMin(box.hi);
        sweep(f, lo, hi, points, best);
        const double next = ((hi - lo) / (points - 1)).maxCoeff();
        if (next >= width) break;
        width = next;
    }
    return best;
}

GridResult scalar_grid(const std::function<double(double)>& f, double lo, double hi, double spacing) {
    GridResult best{VectorXd::Constant(1, lo), std::numeric_limits<double>::infinity()};
    const auto n = static_cast<long>(std::floor((hi - lo) / spacing + 0.5));
    for (long k = 0; k <= n; ++k) {
        const double x = lo + static_cast<double>(k) * spacing;
        const double v = f(x);
        if (v < best.value) {
            best.value = v;
            best.argmin(0) = x;
        }
    }
    return best;
}

GridResult nelder_mead(const ScalarFn& f, const VectorXd& x0, double scale, int max_evals, double ftol) {
    const Index d = x0.size();
    std::vector<VectorXd> simplex(d + 1, x0);
    std::vector<double> val(d + 1);
    for (Index j = 0; j < d; ++j) simplex[j + 1](j) += scale;
    int evals = 0;
    auto eval = [&](const VectorXd& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    for (Index k = 0; k <= d; ++k) val[k] = eval(simplex[k]);
    std::vector<Index> order(d + 1);
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](Index a, Index b) { return val[a] < val[b]; });
        const Index best = order.front();
        const Index worst = order.back();
        const Index second = order[d - 1];
        double size = 0.0;
        for (Index k = 0; k <= d; ++k) size = std::max(size, (simplex[k] - simplex[best]).cwiseAbs().maxCoeff());
        if (std::abs(val[worst] - val[best]) <= ftol * (1.0 + std::abs(val[best])) && size < 1e-10) break;

        VectorXd centroid = VectorXd::Zero(d);
        for (Index k = 0; k <= d; ++k)
            if (k != worst) centroid += simplex[k];
        centroid /= static_cast<double>(d);

        const VectorXd xr = centroid + (centroid - simplex[worst]);
        const double fr = eval(xr);
        if (fr < val[best]) {
            const VectorXd xe = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = eval(xe);
            if (fe < fr) {
                simplex[worst] = xe;
                val[worst] = fe;
            } else {
                simplex[worst] = xr;
                val[worst] = fr;
            }
            continue;
        }
        if (fr < val[second]) {
            simplex[worst] = xr;
            val[worst] = fr;
            continue;
        }
        const bool outside = fr < val[worst];
        const VectorXd xc = outside ? VectorXd(centroid + 0.5 * (xr - centroid))
                                    : VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
        const double fc = eval(xc);
        if (fc < std::min(fr, val[worst])) {
            simplex[worst] = xc;
            val[worst] = fc;
            continue;
        }
        for (Index k = 0; k <= d; ++k) {
            if (k == best) continue;
            simplex[k] = simplex[best] + 0.5 * (simplex[k] - simplex[best]);
            val[k] = eval(simplex[k]);
        }
    }
    const auto it = std::min_element(val.begin(), val.end());
    return {simplex[static_cast<std::size_t>(it - val.begin())], *it};
}

} // namespace lmesel::oracles
