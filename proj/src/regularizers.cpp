#include "lmesel/regularizers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "lmesel/error.hpp"

namespace lmesel {

RegKind parse_reg_kind(const std::string& name) {
    std::string s = name;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "l0") return RegKind::l0;
    if (s == "l1") return RegKind::l1;
    if (s == "alasso") return RegKind::alasso;
    if (s == "scad") return RegKind::scad;
    throw ValidationError("unknown regularizer kind \"" + name + "\" (expected l0, l1, alasso or scad)");
}

std::string to_string(RegKind kind) {
    switch (kind) {
    case RegKind::l0: return "l0";
    case RegKind::l1: return "l1";
    case RegKind::alasso: return "alasso";
    case RegKind::scad: return "scad";
    }
    return "?";
}

void Regularizer::validate(Index dim) const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be finite and >= 0");
    if (kind == RegKind::scad && !(scad_a > 2.0)) throw ValidationError("SCAD parameter a must exceed 2");
    if (weights.size() != 0) {
        if (weights.size() != dim) throw ValidationError("ALASSO weights have the wrong length");
        if (!(weights.array() > 0.0).all() || !weights.allFinite())
            throw ValidationError("ALASSO weights must be finite and positive");
    }
    if (!fixed_mask.empty() && static_cast<Index>(fixed_mask.size()) != dim)
        throw ValidationError("fixed_mask has the wrong length");
}

namespace {

double coord_lambda(const Regularizer& reg, Index j) {
    if (reg.kind == RegKind::alasso && reg.weights.size() != 0) return reg.lambda * reg.weights(j);
    return reg.lambda;
}

bool is_fixed(const Regularizer& reg, Index j) {
    return !reg.fixed_mask.empty() && reg.fixed_mask[static_cast<std::size_t>(j)];
}

double soft(double x, double thresh) {
    if (x > thresh) return x - thresh;
    if (x < -thresh) return x + thresh;
    return 0.0;
}

// SCAD prox for x >= 0. The objective is piecewise quadratic on [0, lambda],
// [lambda, a*lambda] and [a*lambda, inf); the middle piece is concave when
// step >= a - 1, so each piece contributes its own constrained minimizer and
// the best candidate wins. Ties go to the smaller magnitude.
double scad_prox_nonneg(double lambda, double a, double x, double step) {
    const auto objective = [&](double w) { return step * scalar_penalty(RegKind::scad, lambda, a, w) + 0.5 * (w - x) * (w - x); };
    const double lo = lambda;
    const double hi = a * lambda;
    std::array<double, 6> cand{};
    std::size_t k = 0;
    cand[k++] = 0.0;
    cand[k++] = std::clamp(x - step * lambda, 0.0, lo);
    cand[k++] = lo;
    cand[k++] = hi;
    cand[k++] = std::max(x, hi);
    const double curvature = 1.0 - step / (a - 1.0);
    if (curvature > 0.0) cand[k++] = std::clamp((x - step * a * lambda / (a - 1.0)) / curvature, lo, hi);

    double best = cand[0];
    double best_val = objective(best);
    for (std::size_t i = 1; i < k; ++i) {
        const double v = objective(cand[i]);
        if (v < best_val || (v == best_val && cand[i] < best)) {
            best = cand[i];
            best_val = v;
        }
    }
    return best;
}

} // namespace

double scalar_penalty(RegKind kind, double lambda, double scad_a, double w) {
    const double aw = std::abs(w);
    switch (kind) {
    case RegKind::l1:
    case RegKind::alasso: return lambda * aw;
    case RegKind::l0: return w != 0.0 ? lambda : 0.0;
    case RegKind::scad:
        if (aw <= lambda) return lambda * aw;
        if (aw <= scad_a * lambda) return (2.0 * scad_a * lambda * aw - aw * aw - lambda * lambda) / (2.0 * (scad_a - 1.0));
        return 0.5 * lambda * lambda * (scad_a + 1.0);
    }
    return 0.0;
}

double scalar_prox(RegKind kind, double lambda, double scad_a, double x, double step, bool nonneg) {
    if (lambda == 0.0) return nonneg ? std::max(x, 0.0) : x;
    switch (kind) {
    case RegKind::l1:
    case RegKind::alasso: {
        const double w = soft(x, step * lambda);
        return nonneg ? std::max(w, 0.0) : w;
    }
    case RegKind::l0: {
        // keep x iff 1/2 x^2 > step * lambda; exact tie resolves to zero
        const double keep = 0.5 * x * x > step * lambda ? x : 0.0;
        if (!nonneg) return keep;
        // constrained: compare w = max(x, 0) against the boundary w = 0
        if (x <= 0.0) return 0.0;
        return keep;
    }
    case RegKind::scad: {
        if (nonneg) {
            if (x <= 0.0) return 0.0;
            const double w = scad_prox_nonneg(lambda, scad_a, x, step);
            const double at_zero = 0.5 * x * x;
            const double at_w = step * scalar_penalty(kind, lambda, scad_a, w) + 0.5 * (w - x) * (w - x);
            return at_w < at_zero ? w : 0.0;
        }
        const double w = scad_prox_nonneg(lambda, scad_a, std::abs(x), step);
        return x < 0.0 ? -w : w;
    }
    }
    return x;
}

double penalty(const Regularizer& reg, const VectorXd& w, Index nonneg_tail) {
    double total = 0.0;
    const Index dim = w.size();
    for (Index j = 0; j < dim; ++j) {
        if (j >= dim - nonneg_tail && w(j) < 0.0) return std::numeric_limits<double>::infinity();
        if (is_fixed(reg, j)) continue;
        total += scalar_penalty(reg.kind, coord_lambda(reg, j), reg.scad_a, w(j));
    }
    return total;
}

VectorXd prox(const Regularizer& reg, const ProxRequest& req) {
    if (!(req.step > 0.0)) throw ValidationError("prox step must be positive");
    const Index dim = req.point.size();
    VectorXd out(dim);
    for (Index j = 0; j < dim; ++j) {
        const bool nonneg = j >= dim - req.nonneg_tail;
        const double x = req.point(j);
        if (is_fixed(reg, j)) {
            out(j) = nonneg ? std::max(x, 0.0) : x;
            continue;
        }
        out(j) = scalar_prox(reg.kind, coord_lambda(reg, j), reg.scad_a, x, req.step, nonneg);
    }
    return out;
}

std::vector<bool> select_mask(const VectorXd& w, double tol) {
    std::vector<bool> mask(static_cast<std::size_t>(w.size()));
    for (Index j = 0; j < w.size(); ++j) mask[static_cast<std::size_t>(j)] = std::abs(w(j)) > tol;
    return mask;
}

VectorXd alasso_weights(const VectorXd& reference, double floor) {
    return reference.cwiseAbs().cwiseMax(floor).cwiseInverse();
}

} // namespace lmesel
