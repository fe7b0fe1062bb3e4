#include "lmesel/problem.hpp"

#include <fstream>
#include <sstream>
#include <string>

#include "lmesel/error.hpp"

namespace lmesel {

using nlohmann::json;

VectorXd ParamPoint::stacked() const {
    VectorXd w(beta.size() + gamma.size());
    w << beta, gamma;
    return w;
}

ParamPoint ParamPoint::split(const VectorXd& w, Index p) {
    return {w.head(p), w.tail(w.size() - p)};
}

namespace {

std::string group_label(std::size_t i) { return "group " + std::to_string(i) + ": "; }

void require_finite(const MatrixXd& a, const std::string& what) {
    if (!a.allFinite()) throw ValidationError(what + " contains non-finite entries");
}

} // namespace

LMEProblem::LMEProblem(std::vector<GroupBlock> groups) : groups_(std::move(groups)) {
    if (groups_.empty()) throw ValidationError("problem must contain at least one group");
    p_ = groups_.front().X.cols();
    q_ = groups_.front().Z.cols();
    if (p_ < 1 || q_ < 1) throw ValidationError("p and q must both be at least 1");

    lambda_min_.reserve(groups_.size());
    z_sigma_max_.reserve(groups_.size());
    for (std::size_t i = 0; i < groups_.size(); ++i) {
        const auto& g = groups_[i];
        const auto label = group_label(i);
        const Index ni = g.y.size();
        if (ni < 1) throw ValidationError(label + "needs at least one observation");
        if (g.X.rows() != ni || g.Z.rows() != ni)
            throw ValidationError(label + "X, Z and Y must have the same number of rows");
        if (g.X.cols() != p_) throw ValidationError(label + "X has " + std::to_string(g.X.cols()) +
                                                    " columns, expected " + std::to_string(p_));
        if (g.Z.cols() != q_) throw ValidationError(label + "Z has " + std::to_string(g.Z.cols()) +
                                                    " columns, expected " + std::to_string(q_));
        if (g.Lambda.rows() != ni || g.Lambda.cols() != ni)
            throw ValidationError(label + "Lambda must be n_i x n_i");
        require_finite(g.X, label + "X");
        require_finite(g.Z, label + "Z");
        require_finite(g.y, label + "Y");
        require_finite(g.Lambda, label + "Lambda");

        const double scale = 1.0 + g.Lambda.cwiseAbs().maxCoeff();
        if ((g.Lambda - g.Lambda.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw ValidationError(label + "Lambda is not symmetric");
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(g.Lambda, Eigen::EigenvaluesOnly);
        const double lmin = eig.eigenvalues().minCoeff();
        if (!(lmin > 0.0)) throw ValidationError(label + "Lambda is not positive definite");
        lambda_min_.push_back(lmin);

        Eigen::JacobiSVD<MatrixXd> svd(g.Z);
        z_sigma_max_.push_back(svd.singularValues().size() ? svd.singularValues()(0) : 0.0);
        n_ += ni;
    }
}

// ---------------------------------------------------------------------------
// JSON

namespace {

MatrixXd matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ValidationError(what + " must be an array of rows");
    const auto rows = static_cast<Index>(j.size());
    Index cols = -1;
    MatrixXd out;
    for (Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array()) throw ValidationError(what + " row " + std::to_string(r) + " is not an array");
        if (cols < 0) {
            cols = static_cast<Index>(row.size());
            out.resize(rows, cols);
        } else if (static_cast<Index>(row.size()) != cols) {
            throw ValidationError(what + " is ragged at row " + std::to_string(r));
        }
        for (Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw ValidationError(what + " has a non-numeric entry");
            out(r, c) = v.get<double>();
        }
    }
    return out;
}

VectorXd vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) throw ValidationError(what + " must be an array");
    VectorXd out(static_cast<Index>(j.size()));
    for (std::size_t k = 0; k < j.size(); ++k) {
        if (!j[k].is_number()) throw ValidationError(what + " has a non-numeric entry");
        out(static_cast<Index>(k)) = j[k].get<double>();
    }
    return out;
}

MatrixXd lambda_from_json(const json& j, Index n, const std::string& what) {
    if (j.is_number()) return MatrixXd::Identity(n, n) * j.get<double>();
    if (j.is_array() && !j.empty() && j.front().is_number()) {
        VectorXd d = vector_from_json(j, what);
        if (d.size() != n) throw ValidationError(what + " diagonal has wrong length");
        return d.asDiagonal();
    }
    return matrix_from_json(j, what);
}

json matrix_to_json(const MatrixXd& a) {
    json rows = json::array();
    for (Index r = 0; r < a.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < a.cols(); ++c) row.push_back(a(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_to_json(const VectorXd& v) {
    json out = json::array();
    for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
    return out;
}

} // namespace

LMEProblem problem_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("groups"))
        throw ValidationError("problem JSON must be an object with a \"groups\" array");
    const auto& groups_json = doc.at("groups");
    if (!groups_json.is_array()) throw ValidationError("\"groups\" must be an array");
    std::vector<GroupBlock> groups;
    groups.reserve(groups_json.size());
    for (std::size_t i = 0; i < groups_json.size(); ++i) {
        const auto& gj = groups_json[i];
        const auto label = group_label(i);
        for (const char* key : {"X", "Z", "Y", "Lambda"})
            if (!gj.contains(key)) throw ValidationError(label + "missing \"" + key + "\"");
        GroupBlock g;
        g.X = matrix_from_json(gj.at("X"), label + "X");
        g.Z = matrix_from_json(gj.at("Z"), label + "Z");
        g.y = vector_from_json(gj.at("Y"), label + "Y");
        g.Lambda = lambda_from_json(gj.at("Lambda"), g.y.size(), label + "Lambda");
        groups.push_back(std::move(g));
    }
    return LMEProblem(std::move(groups));
}

json problem_to_json(const LMEProblem& problem) {
    json groups = json::array();
    for (const auto& g : problem.groups()) {
        json gj;
        gj["X"] = matrix_to_json(g.X);
        gj["Z"] = matrix_to_json(g.Z);
        gj["Y"] = vector_to_json(g.y);
        const double s = g.Lambda(0, 0);
        const MatrixXd scaled = MatrixXd::Identity(g.Lambda.rows(), g.Lambda.cols()) * s;
        if (g.Lambda == scaled)
            gj["Lambda"] = s;
        else
            gj["Lambda"] = matrix_to_json(g.Lambda);
        groups.push_back(std::move(gj));
    }
    return json{{"groups", std::move(groups)}};
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        std::size_t col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t k = 0; k < stop; ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ValidationError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                              ": malformed JSON (" + e.what() + ")");
    }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << text;
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

LMEProblem load_problem(const std::filesystem::path& path) {
    try {
        return problem_from_json(read_json_file(path));
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void save_problem(const LMEProblem& problem, const std::filesystem::path& path) {
    write_text_atomic(path, problem_to_json(problem).dump() + "\n");
}

} // namespace lmesel
