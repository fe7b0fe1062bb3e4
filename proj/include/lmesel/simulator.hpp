#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lmesel/problem.hpp"

namespace lmesel {

struct SimConfig {
    Index p = 20;
    Index q = 20;
    VectorXd beta_true;
    VectorXd gamma_true;
    std::vector<Index> group_sizes;
    double noise_std = 0.3;
    bool z_equals_x = true;
    std::uint64_t seed = 1;

    void validate() const;
};

struct GroundTruth {
    std::vector<bool> beta_mask;
    std::vector<bool> gamma_mask;
};

/// p = q = 20, beta = gamma = [0.5, 1.0, ..., 5.0, 0 x 10], nine groups
/// of sizes [10, 15, 4, 8, 3, 5, 18, 9, 6], noise 0.3, Z = X.
SimConfig default_sim_config();

/**
 * Draws one problem. Every (group, matrix) pair gets its own mt19937_64
 * stream seeded with seed_seq{seed_lo, seed_hi, group, stream} where stream
 * is 0 for X, 1 for Z, 2 for u and 3 for the noise. Normals come from the
 * Box-Muller transform on 53-bit uniforms (u1 in (0, 1], u2 in [0, 1)),
 * consuming two draws per pair and using both outputs; matrices are
 * filled row by row.
 */
std::pair<LMEProblem, GroundTruth> generate(const SimConfig& cfg);

/// The raw blocks behind generate(), before problem validation. Allows
/// noise_std = 0 (Lambda = 0 is then rejected by LMEProblem, not here).
std::vector<GroupBlock> generate_groups(const SimConfig& cfg);

GroundTruth truth_of(const SimConfig& cfg);

struct Accuracy {
    double joint = 0.0;  // agreement over beta and gamma together
    double beta = 0.0;
    double gamma = 0.0;
    double f1 = 0.0;     // F1 of the joint support; 1 when both supports are empty
};

/// Fraction of coordinates whose selected status matches the truth.
double accuracy(const std::vector<bool>& beta_mask, const std::vector<bool>& gamma_mask, const GroundTruth& truth);
Accuracy accuracy_detail(const std::vector<bool>& beta_mask, const std::vector<bool>& gamma_mask,
                         const GroundTruth& truth);

} // namespace lmesel
