#pragma once

#include "grbsde/gbsde.hpp"

#include <string>
#include <vector>

namespace grbsde {

/// Cumulative K from per-node increments: K_root = 0, K_child = K_parent + dK_parent.
NodeValues accumulate(const ScenarioTree& tree, const NodeValues& dk);

struct ReflectedSolution {
    GBSDESolution base;
    Side side = Side::lower;
    NodeValues K;    // nondecreasing along paths, K_root = 0
    NodeValues dK;   // increment over (t_k, t_{k+1}] decided at the layer-k node; 0 on leaves
    NodeValues dKc;  // continuous part (equals dK until decompose_K is applied)
    NodeValues dKd;  // predictable-jump part
    double skorokhod_residual = 0.0;
};

struct PenalizedSolution {
    double n = 0.0;
    GBSDESolution sol;
    NodeValues K;
    NodeValues dK;  // n (Y^n - L)^- dt on each interior node (upper side: n (Y^n - U)^+ dt)
};

struct AuxiliaryDiagnostics {
    double n = 0.0;
    NodeValues ybar;       // implicit linear-drift solution
    NodeValues ybar_repr;  // discounted path representation, computed by enumerating paths
    NodeValues X;          // E[discounted L_T + sum discounted n dt L | u] - L_u
    double representation_residual = 0.0;  // max |ybar - ybar_repr|
    double sup_neg_y = 0.0;                // max (Y^n - L)^-
    double sup_neg_ybar = 0.0;             // max (Ybar^n - L)^-
    double min_gap = 0.0;                  // min (Y^n - Ybar^n), sign flipped for an upper barrier
};

/// Solution with f_n = f + n (y - L)^-; the penalty is part of the implicit solve.
PenalizedSolution solve_penalized(const ScenarioTree& tree, const ProblemData& data, double n);

/// Y = max(L, root) (lower) or min(U, root) (upper); dK closes the backward equation.
ReflectedSolution solve_reflected_direct(const ScenarioTree& tree, const ProblemData& data, Side side);

/// Sum_u P(u) |Y_u - L_u| dK_u over interior nodes.
double check_skorokhod(const ScenarioTree& tree, const NodeValues& y, const Barrier& barrier, const NodeValues& dk);
double check_skorokhod(const ScenarioTree& tree, const ReflectedSolution& sol, const Barrier& barrier);

struct KDecomposition {
    NodeValues Kc;
    NodeValues Kd;
    NodeValues dKc;
    NodeValues dKd;
};

/**
 * dK_u (layer k) goes to the jump part when t_{k+1} is flagged as a predictable
 * down-jump of the barrier and dK_u equals the overshoot
 *   (E[Y_next | u] + f dt + g dA - L_u)^-
 * (upper barrier: (... - U_u)^+) within 1e-10; otherwise to the continuous part.
 */
KDecomposition decompose_K(const ScenarioTree& tree, const ProblemData& data, const ReflectedSolution& sol);

/// Fills sol.dKc / sol.dKd from decompose_K.
void apply_decomposition(const ScenarioTree& tree, const ProblemData& data, ReflectedSolution& sol);

/// Auxiliary equation with f, g frozen at the penalized solution:
///   Ybar_k = (E[Ybar_next] + f dt + g dA + n dt L_k) / (1 + n dt)
AuxiliaryDiagnostics solve_auxiliary(const ScenarioTree& tree, const ProblemData& data, const PenalizedSolution& pen);
AuxiliaryDiagnostics solve_auxiliary(const ScenarioTree& tree, const ProblemData& data, double n);

struct ConvergenceRow {
    double n = 0.0;
    double sup_neg_part = 0.0;
    double sup_diff_prev = 0.0;
    double skorokhod_residual = 0.0;
    double norm_y = 0.0;
    double norm_z = 0.0;
    double norm_v = 0.0;
    double norm_m = 0.0;
    double norm_k = 0.0;
    double monotonicity_violation = 0.0;
    double max_diff_direct = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    std::vector<PenalizedSolution> solutions;
    ReflectedSolution direct;
    double max_monotonicity_violation = 0.0;
    bool sup_neg_decreasing = true;  // strictly, wherever the previous value is positive
    bool norms_stable = true;        // last two norms within a factor of 2 per component
    bool converged = false;          // last sup_neg_part <= tol and successive differences decrease

    static std::vector<std::string> csv_header();
};

/// Penalized solves along a strictly increasing n-list, compared with the direct solution.
ConvergenceReport penalization_sweep(const ScenarioTree& tree, const ProblemData& data,
                                     const std::vector<double>& n_list, double tol);

}  // namespace grbsde
