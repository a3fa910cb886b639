#pragma once

#include "grbsde/gbsde.hpp"
#include "grbsde/model.hpp"
#include "grbsde/norms.hpp"
#include "grbsde/reflected.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace grbsde {

/// gamma = 1 + 2|alpha| + 4 kappa^2 for the fixed-point norm.
double default_gamma(const Driver& driver);

/// One prefix-sum inequality  lhs <= rhs  evaluated up to every layer.
struct PrefixInequality {
    std::string name;
    bool applicable = true;    // the growth bound it relies on holds on every node of the solution
    double worst_margin = 0.0; // min over layers of (rhs - lhs)
    double lhs_total = 0.0;    // at the horizon
    double rhs_total = 0.0;
    std::string formula;
    bool holds() const { return worst_margin >= 0.0; }
};

struct EstimateReport {
    // Solution side.
    double sup_y = 0.0;    // E[max_k e^{mu A_k} Y_k^2]
    double y_da = 0.0;     // E[sum e^{mu A_{k+1}} Y_k^2 dA_k]
    double zv_dt = 0.0;    // E[sum e^{mu A_{k+1}} (|Z_k|^2 + |V_k|_Q^2) dt_k]
    double m_qv = 0.0;     // E[sum e^{mu A_{k+1}} dM_{k+1}^2]
    double k_t = 0.0;      // E[K_T^2]
    // Data side.
    double xi_term = 0.0;   // E[e^{mu A_T} xi^2]
    double phi_term = 0.0;  // E[sum e^{mu A_{k+1}} phi^2 dt]
    double psi_term = 0.0;  // E[sum e^{mu A_{k+1}} psi^2 dA]
    double barrier_term = 0.0;  // E[max_k e^{2 mu A_k} (L_k^+)^2] (U^- for an upper barrier)

    double lhs() const { return sup_y + y_da + zv_dt + m_qv + k_t; }
    double rhs() const { return xi_term + phi_term + psi_term + barrier_term; }
    double ratio = 0.0;  // lhs / rhs; 0 when both vanish, +inf when only rhs does

    std::vector<PrefixInequality> inequalities;  // the (int g dA)^2, (int f dt)^2 and E[e^{mu A_T}] bounds
    bool inequalities_hold() const;
};

/// Terms of the a priori estimate for a solution (Y, Z, V, M) with increasing process K.
EstimateReport apriori_check(const ScenarioTree& tree, const ProblemData& data, const GBSDESolution& sol,
                             const NodeValues* K, const WeightedNormConfig& cfg);

struct ContractionReport {
    std::vector<double> ratios;  // |delta^{i+1}|^2 / |delta^i|^2
    double max_ratio = 0.0;
    bool below_one = true;
    bool within_half = true;  // max_ratio <= 0.5 (reported only)
};

/**
 * Ratios of successive squared differences along the iterate history. Differences at
 * round-off level (below 1e-26 times the squared norm of the last iterate) count as zero,
 * and a ratio with a zero denominator is 0.
 */
ContractionReport contraction_rate(const ScenarioTree& tree, const PicardResult& picard, const WeightedNormConfig& cfg);

struct ComparisonReport {
    NodeValues y;
    NodeValues y2;
    std::size_t y_violations = 0;
    double max_y_violation = 0.0;  // max (Y - Y')
    double min_gap = 0.0;          // min (Y' - Y)
    bool k_checked = false;
    std::size_t k_violations = 0;
    double max_k_violation = 0.0;  // max (dK' - dK)
    bool passed() const { return y_violations == 0 && k_violations == 0; }
};

/**
 * Solves both problems (reflected on the common barrier side when both carry a barrier)
 * and checks Y <= Y'. With (z,v)-free drivers and identical barriers it also checks the
 * increments of K: dK >= dK' on every node.
 * Throws precondition-violated (with the offending node) when xi <= xi', L <= L' or
 * f <= f', g <= g' along the second solution fail.
 */
ComparisonReport compare_solutions(const ScenarioTree& tree, const ProblemData& data, const ProblemData& data2,
                                   double tol = 1e-10);

struct GammaConditionReport {
    bool passed = true;
    double max_violation = 0.0;
    std::optional<Witness> witness;
};

/// f(v) - f(v') <= max over gamma_j in [max(-1, -nu_j), nu_j] of sum_j gamma_j (v - v')_j q_j on sampled tuples.
GammaConditionReport check_gamma_condition(const ScenarioTree& tree, const ProblemData& data,
                                           const std::vector<double>& nu, std::size_t samples, std::uint64_t seed,
                                           const SamplingBox& box = {});

}  // namespace grbsde
