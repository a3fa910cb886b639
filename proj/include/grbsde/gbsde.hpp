#pragma once

#include "grbsde/model.hpp"
#include "grbsde/norms.hpp"
#include "grbsde/scenario.hpp"

#include <optional>
#include <vector>

namespace grbsde {

/// Node-indexed solution of the discrete backward equation
///   Y_u = E[Y_next | u] + f(t_k,u,Y_u,Z_u,V_u) dt_k + g(t_k,u,Y_u) dA_k   (+/- dK_u when reflected)
struct GBSDESolution {
    NodeValues y;
    NodeVectors z;       // per interior node, R^d
    NodeVectors v;       // per interior node, one entry per mark
    NodeValues dm;       // orthogonal martingale increment on the edge into each non-root node
    NodeValues residual; // |backward equation residual| per interior node
};

struct StepOptions {
    /// Adds penalty * (y - L)^- (or -penalty * (y - U)^+) to the driver; needs a barrier.
    double penalty = 0.0;
    /// Projects the root onto the barrier of the given side and records dK.
    std::optional<Side> reflect;
    /// Freeze (z, v) inside f at these values instead of the projections (fixed-point map).
    const NodeVectors* frozen_z = nullptr;
    const NodeVectors* frozen_v = nullptr;
    double root_tol = 1e-12;
};

struct StepResult {
    double y = 0.0;
    std::vector<double> z;
    std::vector<double> v;
    std::vector<double> dm;  // one entry per child
    double dk = 0.0;         // reflection or penalty increment over (t_k, t_{k+1}]
    double residual = 0.0;
};

/**
 * One implicit step at an interior node. (z, v, dm) come from the martingale
 * decomposition of next - E[next]; y is the unique root of the strictly increasing
 *   h(y) = y - f(y,z,v) dt - g(y) dA - E[next]
 * Throws non-monotone-step when 1 - alpha*dt - beta*dA <= 0.
 */
StepResult backward_step(const ScenarioTree& tree, const ProblemData& data, std::size_t node,
                         const NodeValues& next, const StepOptions& opts = {});

/// Full backward sweep; dK per node is written to `dk` when non-null.
GBSDESolution backward_sweep(const ScenarioTree& tree, const ProblemData& data, const StepOptions& opts,
                             NodeValues* dk = nullptr);

/// Unreflected solve (any barrier in `data` is ignored).
GBSDESolution solve_gbsde(const ScenarioTree& tree, const ProblemData& data);

struct PicardIterate {
    NodeValues y;
    NodeVectors z;
    NodeVectors v;
    NodeValues dm;
};

struct PicardResult {
    GBSDESolution solution;
    std::vector<PicardIterate> history;  // successive images of the map, starting from Psi(Z^0, V^0)
    std::vector<double> diff_norms;      // diff_norms[i] = |history[i+1] - history[i]|^2
    bool converged = false;
    std::size_t iterations = 0;          // applications of the map until a fixed point was reached
};

/**
 * Fixed-point iteration: iterate i solves the equation with f frozen at (Z^{i-1}, V^{i-1}).
 * With `reflect` set the map includes the reflection (the map of the general existence
 * argument); otherwise it is the plain equation. Non-convergence is reported, not thrown.
 */
PicardResult picard_solve(const ScenarioTree& tree, const ProblemData& data, const NodeVectors& z0,
                          const NodeVectors& v0, std::size_t max_iters, double tol,
                          const WeightedNormConfig& norm, std::optional<Side> reflect = std::nullopt);

/// Squared fixed-point-norm distance between two iterates.
double iterate_distance(const ScenarioTree& tree, const PicardIterate& a, const PicardIterate& b,
                        const WeightedNormConfig& norm);

/// Zero-filled (Z, V) starting values shaped for `tree`.
NodeVectors zero_vectors(const ScenarioTree& tree, std::size_t dim);

}  // namespace grbsde
