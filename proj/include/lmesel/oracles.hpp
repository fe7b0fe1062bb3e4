#pragma once

#include <functional>

#include <Eigen/Dense>

namespace lmesel::oracles {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using ScalarFn = std::function<double(const VectorXd&)>;
using VectorFn = std::function<VectorXd(const VectorXd&)>;

/// Central differences with step h * max(1, |x_j|).
VectorXd fd_gradient(const ScalarFn& f, const VectorXd& x, double h = 1e-6);
/// Columns are central differences of g; not symmetrized.
MatrixXd fd_jacobian(const VectorFn& g, const VectorXd& x, double h = 1e-6);

/// ||a - b|| / max(||b||, floor)
double rel_error(const VectorXd& a, const VectorXd& b, double floor = 1e-8);
double rel_error(const MatrixXd& a, const MatrixXd& b, double floor = 1e-8);

struct Box {
    VectorXd lo;
    VectorXd hi;
};

struct GridResult {
    VectorXd argmin;
    double value = 0.0;
};

/// Exhaustive tensor grid with `points` nodes per axis, then repeated
/// zooming onto a window of +-2 cells around the incumbent (clipped to the
/// original box) until the cell width drops below `resolution`.
GridResult grid_minimize(const ScalarFn& f, const Box& box, int points, double resolution);

/// Uniform 1-d grid argmin (first minimizer on ties).
GridResult scalar_grid(const std::function<double(double)>& f, double lo, double hi, double spacing);

/// Nelder-Mead simplex; derivative-free reference minimizer.
GridResult nelder_mead(const ScalarFn& f, const VectorXd& x0, double scale = 0.5, int max_evals = 200000,
                       double ftol = 1e-14);

} // namespace lmesel::oracles
