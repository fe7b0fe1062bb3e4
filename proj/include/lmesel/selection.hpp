#pragma once

#include <vector>

#include "lmesel/algorithms.hpp"

namespace lmesel {

/// 2 L(beta~, gamma~) + k ln n with k the number of nonzero entries of the
/// sparse point and n the total number of observations.
double bic(const LMEProblem& problem, const SolveReport& report);

struct EtaScore {
    double eta = 0.0;
    double bic = 0.0;
    bool ok = false;
    std::string error;
    SolveReport report;
};

struct EtaSelection {
    double eta_best = 0.0;
    std::vector<EtaScore> scores;  // in grid order
};

/// Runs msr3_fast at each eta and returns the BIC minimizer. Ties go to the
/// smaller eta. Throws ConvergenceError if every grid point fails.
EtaSelection select_eta(const LMEProblem& problem, const Regularizer& reg, const std::vector<double>& eta_grid,
                        const SolverConfig& cfg);

struct EtaProbeRow {
    double eta = 0.0;
    double gap = 0.0;  // ||(beta^, gamma^) - (beta~, gamma~)||
};

struct MuProbeRow {
    double mu = 0.0;
    double distance = 0.0;  // to the mu = 0 reference solution
    ParamPoint sparse;
};

struct ConsistencyTable {
    std::vector<EtaProbeRow> eta_rows;
    std::vector<MuProbeRow> mu_rows;
    ParamPoint reference;  // grid minimizer of L + R over gamma >= 0
};

/// Only defined for p = q = 1. The eta table solves with pgd_value at
/// mu = mu_eta; the mu table solves at eta = eta_mu and compares against a
/// brute-force grid minimizer of L + R.
ConsistencyTable consistency_probe(const LMEProblem& problem, const Regularizer& reg,
                                   const std::vector<double>& eta_sequence, const std::vector<double>& mu_sequence,
                                   const SolverConfig& cfg, double mu_eta = 1e-4, double eta_mu = 0.0);

} // namespace lmesel
