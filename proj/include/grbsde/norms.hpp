#pragma once

#include "grbsde/scenario.hpp"

#include <string_view>

namespace grbsde {

struct WeightedNormConfig {
    double mu = 2.0;     // A-weight exponent, > 1
    double gamma = 1.0;  // time-weight exponent, > 0 (only the contraction norm uses it)
};

enum class Space {
    S2muA,    // E[ max_k e^{mu A_k}|Y_k|^2 + sum_k e^{mu A_{k+1}} |Y_k|^2 dA_k ]
    M2mu_dt,  // E[ sum_k e^{mu A_{k+1}} |X_k|^2 dt_k ]
    M2mu_dA,  // E[ sum_k e^{mu A_{k+1}} |X_k|^2 dA_k ]
    M2mart,   // E[ sum_k e^{mu A_{k+1}} (dM_{k+1})^2 ], increments indexed by child node
    K,        // E[ K_T^2 ]
};

Space parse_space(std::string_view id);
std::string_view space_name(Space s) noexcept;

enum class VectorMetric { euclidean, q_weighted };

// Integrals over (t_k, t_{k+1}] take the integrand at t_k and the weight at the right
// end of the step; A_{k+1} = A_k + dA_k is already known at t_k.

/// e^{gamma t_{k+1} + mu A_{k+1}} for the step leaving interior node u.
double step_weight(const ScenarioTree& tree, std::size_t u, double gamma, double mu);

/// Squared weighted norm of a scalar process (or of edge increments for M2mart).
double weighted_norm(const ScenarioTree& tree, const NodeValues& x, Space space, const WeightedNormConfig& cfg);

/// Squared weighted norm of a vector process (Z with the Euclidean metric, V with |.|_Q).
double weighted_norm(const ScenarioTree& tree, const NodeVectors& x, Space space, const WeightedNormConfig& cfg,
                     VectorMetric metric);

/**
 * Squared norm used for the fixed-point map:
 *   E[ sum_k Phi_{k+1} ( (|Y_k|^2 + |Z_k|^2 + |V_k|_Q^2) dt_k + |Y_k|^2 dA_k ) + sum_k Phi_{k+1} dM_{k+1}^2 ]
 * with Phi = e^{gamma t + mu A}.
 */
double contraction_norm(const ScenarioTree& tree, const NodeValues& y, const NodeVectors& z, const NodeVectors& v,
                        const NodeValues& dm, const WeightedNormConfig& cfg);

}  // namespace grbsde
