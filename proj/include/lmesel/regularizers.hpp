#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lmesel {

using Eigen::Index;
using Eigen::VectorXd;

enum class RegKind { l0, l1, alasso, scad };

RegKind parse_reg_kind(const std::string& name);
std::string to_string(RegKind kind);

/**
 * Separable selection penalty over the stacked [beta; gamma] coordinates.
 *
 * weights are the adaptive-lasso coefficients a_j (ALASSO only; empty means
 * all ones). fixed_mask marks coordinates that are never penalized; empty
 * means every coordinate is penalized.
 */
struct Regularizer {
    RegKind kind = RegKind::l1;
    double lambda = 0.0;
    VectorXd weights;
    double scad_a = 3.7;
    std::vector<bool> fixed_mask;

    /// Throws ValidationError unless the invariants hold for a vector of length dim.
    void validate(Index dim) const;
};

struct ProxRequest {
    VectorXd point;
    double step = 1.0;
    /// Number of trailing coordinates additionally constrained to be >= 0.
    Index nonneg_tail = 0;
};

/// Penalty value. Returns +inf if any of the last nonneg_tail entries is negative.
double penalty(const Regularizer& reg, const VectorXd& w, Index nonneg_tail = 0);

/// Coordinatewise argmin_w step * pen(w) + 1/2 (w - x)^2.
VectorXd prox(const Regularizer& reg, const ProxRequest& req);

/// Scalar building blocks. lambda is the effective strength of this
/// coordinate (already multiplied by any adaptive weight).
double scalar_penalty(RegKind kind, double lambda, double scad_a, double w);
double scalar_prox(RegKind kind, double lambda, double scad_a, double x, double step, bool nonneg);

/// mask_j = |w_j| > tol
std::vector<bool> select_mask(const VectorXd& w, double tol = 0.0);

/// Adaptive-lasso weights 1 / max(|w_ref_j|, floor) from a preliminary fit.
VectorXd alasso_weights(const VectorXd& reference, double floor = 1e-6);

} // namespace lmesel
