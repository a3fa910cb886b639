#pragma once

#include "grbsde/reflected.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace grbsde {

/**
 * Stop/continue rule on the nodes at or after `start_layer`. A path stops at the first
 * node with stop[u] set; leaves always stop. Since the rule is a function of the node it
 * is adapted by construction.
 */
struct StoppingTime {
    std::size_t start_layer = 0;
    std::vector<std::uint8_t> stop;

    /// Always stop at `layer` (>= start).
    static StoppingTime at_layer(const ScenarioTree& tree, std::size_t start, std::size_t layer);

    /// From the stopping layer of every path (indexed by leaf, in leaf order). Throws
    /// invalid-stopping-time when two paths sharing a node disagree on stopping there.
    static StoppingTime from_leaf_layers(const ScenarioTree& tree, std::size_t start,
                                         const std::vector<std::size_t>& layers);

    /// Layer at which the path through `leaf` stops.
    std::size_t stop_layer(const ScenarioTree& tree, std::size_t leaf) const;
};

/// Running reward f(Y,Z,V) dt + g(Y) dA per interior node, frozen at a solution.
NodeValues running_reward(const ScenarioTree& tree, const ProblemData& data, const GBSDESolution& sol);

/// S_K = xi; S_k = max(L, E[S_next] + reward) (min with U for an upper barrier).
NodeValues snell_envelope(const ScenarioTree& tree, const ProblemData& data, const GBSDESolution& frozen);

/// J(tau) at every node of tau.start_layer; other entries NaN.
NodeValues evaluate_stopping(const ScenarioTree& tree, const ProblemData& data, const StoppingTime& tau,
                             const GBSDESolution& frozen);

/// Number of stop/continue rules on the subtree of `node`: N(leaf) = 1, N(u) = 1 + prod N(children).
/// Saturates at +inf.
double count_policies(const ScenarioTree& tree, std::size_t node);
/// Number of stopping times starting at layer t (product over the nodes of the layer).
double count_stopping_times(const ScenarioTree& tree, std::size_t t);

inline constexpr double default_enumeration_cap = 1e6;

/// Every stopping time starting at layer t. Throws enumeration-too-large above the cap.
std::vector<StoppingTime> enumerate_stopping_times(const ScenarioTree& tree, std::size_t t,
                                                   double cap = default_enumeration_cap);

/// Visits every rule on the subtree of `node` (start layer = layer of node) without storing them.
void for_each_policy(const ScenarioTree& tree, std::size_t node, double cap,
                     const std::function<void(const StoppingTime&)>& visit);

/// First time from t with Y <= L + 1/p (Y >= U - 1/p for an upper barrier), capped at T.
StoppingTime optimal_nu_p(const ScenarioTree& tree, const ProblemData& data, const NodeValues& y, double p,
                          std::size_t t);

enum class StopMethod { enumerate, nu_p };

struct PolicyRow {
    std::size_t policy = 0;
    std::size_t node = 0;
    double p = 0.0;  // nu_p only
    double value = 0.0;
    double gap = 0.0;  // Y - J (J - Y for an upper barrier)
};

struct NodeStopRow {
    std::size_t node = 0;
    double y = 0.0;
    double best = 0.0;  // max J (min J for an upper barrier); J(nu^p) for the largest p
    double gap = 0.0;   // |best - Y|
    double policies = 0.0;
};

struct StoppingValueReport {
    StopMethod method = StopMethod::enumerate;
    Side side = Side::lower;
    std::size_t start_layer = 0;
    std::vector<NodeStopRow> nodes;
    std::vector<PolicyRow> policies;
    double max_gap = 0.0;            // enumerate: max |best J - Y|
    double max_dominance = 0.0;      // max over policies of (J - Y) oriented; should be <= 0
    double max_nu_p_excess = 0.0;    // nu_p: max (Y - J(nu^p)) - 1/p, oriented
    double min_nu_p_gap = 0.0;       // nu_p: min (Y - J(nu^p)), oriented
    bool passed = true;
};

std::string method_name(StopMethod m);
StopMethod parse_method(const std::string& s);

/// Compares the reflected Y at every node of layer t with the stopping values.
StoppingValueReport verify_representation(const ScenarioTree& tree, const ProblemData& data,
                                          const ReflectedSolution& sol, StopMethod method, std::size_t t,
                                          const std::vector<double>& p_list = {1.0, 10.0, 100.0},
                                          double cap = default_enumeration_cap, double tol = 1e-10);

}  // namespace grbsde
