#include "lmesel/simulator.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "lmesel/error.hpp"

namespace lmesel {

void SimConfig::validate() const {
    if (p < 1 || q < 1) throw ValidationError("p and q must be >= 1");
    if (beta_true.size() != p) throw ValidationError("beta_true must have length p");
    if (gamma_true.size() != q) throw ValidationError("gamma_true must have length q");
    if (!beta_true.allFinite() || !gamma_true.allFinite()) throw ValidationError("truth must be finite");
    if ((gamma_true.array() < 0.0).any()) throw ValidationError("gamma_true must be >= 0");
    if (group_sizes.empty()) throw ValidationError("group_sizes is empty");
    for (Index s : group_sizes)
        if (s < 1) throw ValidationError("group sizes must be >= 1");
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw ValidationError("noise_std must be >= 0");
    if (z_equals_x && q != p) throw ValidationError("z_equals_x requires q = p");
}

SimConfig default_sim_config() {
    SimConfig cfg;
    cfg.beta_true = VectorXd::Zero(20);
    for (int j = 0; j < 10; ++j) cfg.beta_true(j) = 0.5 * (j + 1);
    cfg.gamma_true = cfg.beta_true;
    cfg.group_sizes = {10, 15, 4, 8, 3, 5, 18, 9, 6};
    return cfg;
}

namespace {

class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t group, std::uint64_t stream) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(group), static_cast<std::uint32_t>(stream)};
        engine_.seed(seq);
    }

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    MatrixXd matrix(Index rows, Index cols) {
        MatrixXd m(rows, cols);
        for (Index r = 0; r < rows; ++r)
            for (Index c = 0; c < cols; ++c) m(r, c) = (*this)();
        return m;
    }

private:
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::vector<bool> nonzero(const VectorXd& v) {
    std::vector<bool> m(static_cast<std::size_t>(v.size()));
    for (Index j = 0; j < v.size(); ++j) m[static_cast<std::size_t>(j)] = v(j) != 0.0;
    return m;
}

} // namespace

GroundTruth truth_of(const SimConfig& cfg) { return {nonzero(cfg.beta_true), nonzero(cfg.gamma_true)}; }

std::vector<GroupBlock> generate_groups(const SimConfig& cfg) {
    cfg.validate();
    std::vector<GroupBlock> groups;
    groups.reserve(cfg.group_sizes.size());
    const VectorXd sd = cfg.gamma_true.cwiseSqrt();
    for (std::size_t i = 0; i < cfg.group_sizes.size(); ++i) {
        const Index ni = cfg.group_sizes[i];
        GroupBlock g;
        g.X = NormalStream(cfg.seed, i, 0).matrix(ni, cfg.p);
        g.Z = cfg.z_equals_x ? g.X : NormalStream(cfg.seed, i, 1).matrix(ni, cfg.q);
        const VectorXd u = sd.cwiseProduct(NormalStream(cfg.seed, i, 2).matrix(cfg.q, 1).col(0));
        const VectorXd eps = cfg.noise_std * NormalStream(cfg.seed, i, 3).matrix(ni, 1).col(0);
        g.y = g.X * cfg.beta_true + g.Z * u + eps;
        g.Lambda = cfg.noise_std * cfg.noise_std * MatrixXd::Identity(ni, ni);
        groups.push_back(std::move(g));
    }
    return groups;
}

std::pair<LMEProblem, GroundTruth> generate(const SimConfig& cfg) {
    if (!(cfg.noise_std > 0.0)) throw ValidationError("noise_std must be positive: Lambda = noise_std^2 I must be PD");
    return {LMEProblem(generate_groups(cfg)), truth_of(cfg)};
}

Accuracy accuracy_detail(const std::vector<bool>& beta_mask, const std::vector<bool>& gamma_mask,
                         const GroundTruth& truth) {
    if (beta_mask.size() != truth.beta_mask.size() || gamma_mask.size() != truth.gamma_mask.size())
        throw ValidationError("mask lengths do not match the truth");
    std::size_t agree_b = 0, agree_g = 0, tp = 0, fp = 0, fn = 0;
    const auto tally = [&](const std::vector<bool>& est, const std::vector<bool>& ref, std::size_t& agree) {
        for (std::size_t j = 0; j < est.size(); ++j) {
            agree += est[j] == ref[j];
            tp += est[j] && ref[j];
            fp += est[j] && !ref[j];
            fn += !est[j] && ref[j];
        }
    };
    tally(beta_mask, truth.beta_mask, agree_b);
    tally(gamma_mask, truth.gamma_mask, agree_g);

    Accuracy acc;
    const auto nb = static_cast<double>(beta_mask.size());
    const auto ng = static_cast<double>(gamma_mask.size());
    acc.joint = static_cast<double>(agree_b + agree_g) / (nb + ng);
    acc.beta = nb > 0 ? static_cast<double>(agree_b) / nb : 1.0;
    acc.gamma = ng > 0 ? static_cast<double>(agree_g) / ng : 1.0;
    const std::size_t denom = 2 * tp + fp + fn;
    acc.f1 = denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    return acc;
}

double accuracy(const std::vector<bool>& beta_mask, const std::vector<bool>& gamma_mask, const GroundTruth& truth) {
    return accuracy_detail(beta_mask, gamma_mask, truth).joint;
}

} // namespace lmesel
