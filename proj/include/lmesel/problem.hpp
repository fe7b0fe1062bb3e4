#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace lmesel {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One group of observations: designs, outcomes and the known noise covariance.
struct GroupBlock {
    MatrixXd X;       // n_i x p fixed-effect design
    MatrixXd Z;       // n_i x q random-effect design
    VectorXd y;       // n_i outcomes
    MatrixXd Lambda;  // n_i x n_i, symmetric positive definite
};

/// (beta, gamma) pair. gamma holds the random-effect variances and must be >= 0.
struct ParamPoint {
    VectorXd beta;
    VectorXd gamma;

    static ParamPoint zeros(Index p, Index q) { return {VectorXd::Zero(p), VectorXd::Zero(q)}; }
    /// Stacked [beta; gamma].
    VectorXd stacked() const;
    static ParamPoint split(const VectorXd& w, Index p);
};

/**
 * Immutable grouped LME instance.
 *
 * Construction validates every group (shapes, Lambda symmetric PD) and
 * precomputes the spectral quantities needed by eta_bar(). Once built the
 * object is never mutated, so it can be shared freely across threads.
 */
class LMEProblem {
public:
    explicit LMEProblem(std::vector<GroupBlock> groups);

    Index m() const { return static_cast<Index>(groups_.size()); }
    Index p() const { return p_; }
    Index q() const { return q_; }
    Index n() const { return n_; }

    const GroupBlock& group(Index i) const { return groups_[static_cast<std::size_t>(i)]; }
    const std::vector<GroupBlock>& groups() const { return groups_; }

    /// Smallest eigenvalue of Lambda_i.
    double lambda_min(Index i) const { return lambda_min_[static_cast<std::size_t>(i)]; }
    /// Largest singular value of Z_i.
    double z_sigma_max(Index i) const { return z_sigma_max_[static_cast<std::size_t>(i)]; }

private:
    std::vector<GroupBlock> groups_;
    Index p_ = 0;
    Index q_ = 0;
    Index n_ = 0;
    std::vector<double> lambda_min_;
    std::vector<double> z_sigma_max_;
};

// JSON problem format:
//   {"groups": [{"X": [[...]], "Z": [[...]], "Y": [...], "Lambda": s | [d...] | [[...]]}, ...]}
// Lambda given as a scalar means s*I, a vector means a diagonal.
LMEProblem problem_from_json(const nlohmann::json& doc);
nlohmann::json problem_to_json(const LMEProblem& problem);

LMEProblem load_problem(const std::filesystem::path& path);
void save_problem(const LMEProblem& problem, const std::filesystem::path& path);

/// Parses a JSON file, turning parse errors into ValidationError with line/column.
nlohmann::json read_json_file(const std::filesystem::path& path);
/// Writes via a temporary file and rename so a failure never leaves partial output.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

} // namespace lmesel
