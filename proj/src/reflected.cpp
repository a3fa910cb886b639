#include "grbsde/reflected.hpp"

#include "grbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace grbsde {

namespace {

const Barrier& barrier_of(const ProblemData& data) {
    if (!data.barrier) {
        throw Error(ErrorCode::missing_barrier, "the problem has no barrier");
    }
    return *data.barrier;
}

// Amount by which y sits on the wrong side of the barrier.
double violation(double y, double level, Side side) {
    return side == Side::lower ? std::max(level - y, 0.0) : std::max(y - level, 0.0);
}

double sup_violation(const ScenarioTree& tree, const NodeValues& y, const Barrier& bar) {
    double out = 0.0;
    for (std::size_t u = 0; u < tree.size(); ++u) {
        out = std::max(out, violation(y[u], bar.level[u], bar.side));
    }
    return out;
}

double max_abs_diff(const NodeValues& a, const NodeValues& b) {
    double out = 0.0;
    for (std::size_t u = 0; u < a.size(); ++u) {
        out = std::max(out, std::abs(a[u] - b[u]));
    }
    return out;
}

double driver_increment(const ScenarioTree& tree, const ProblemData& data, const GBSDESolution& sol,
                        std::size_t u) {
    const auto& n = tree.node(u);
    return evaluate_f(tree, data, u, sol.y[u], sol.z[u], sol.v[u]) * tree.grid().step(n.layer) +
           evaluate_g(tree, data, u, sol.y[u]) * n.da;
}

}  // namespace

NodeValues accumulate(const ScenarioTree& tree, const NodeValues& dk) {
    NodeValues k(tree.size());
    for (std::size_t u = 0; u < tree.size(); ++u) {
        const auto& n = tree.node(u);
        k[u] = n.parent == npos ? 0.0 : k[n.parent] + dk[n.parent];
    }
    return k;
}

PenalizedSolution solve_penalized(const ScenarioTree& tree, const ProblemData& data, double n) {
    if (!(n >= 0.0)) {
        throw Error(ErrorCode::invalid_schedule, "penalty level must be nonnegative");
    }
    if (n > 0.0) {
        barrier_of(data);
    }
    PenalizedSolution out;
    out.n = n;
    StepOptions opts;
    opts.penalty = n;
    out.sol = backward_sweep(tree, data, opts, &out.dK);
    for (std::size_t u = tree.layer_begin(tree.steps()); u < tree.size(); ++u) {
        out.dK[u] = 0.0;
    }
    out.K = accumulate(tree, out.dK);
    return out;
}

ReflectedSolution solve_reflected_direct(const ScenarioTree& tree, const ProblemData& data, Side side) {
    ReflectedSolution out;
    out.side = side;
    StepOptions opts;
    opts.reflect = side;
    out.base = backward_sweep(tree, data, opts, &out.dK);
    for (std::size_t u = tree.layer_begin(tree.steps()); u < tree.size(); ++u) {
        out.dK[u] = 0.0;
    }
    out.K = accumulate(tree, out.dK);
    out.dKc = out.dK;
    out.dKd = NodeValues(tree.size(), 0.0);
    out.skorokhod_residual = check_skorokhod(tree, out, barrier_of(data));
    return out;
}

double check_skorokhod(const ScenarioTree& tree, const NodeValues& y, const Barrier& barrier, const NodeValues& dk) {
    double acc = 0.0;
    const std::size_t interior = tree.layer_begin(tree.steps());
    for (std::size_t u = 0; u < interior; ++u) {
        if (dk[u] == 0.0) {
            continue;
        }
        acc += tree.node(u).prob * std::abs(y[u] - barrier.level[u]) * dk[u];
    }
    return acc;
}

double check_skorokhod(const ScenarioTree& tree, const ReflectedSolution& sol, const Barrier& barrier) {
    return check_skorokhod(tree, sol.base.y, barrier, sol.dK);
}

KDecomposition decompose_K(const ScenarioTree& tree, const ProblemData& data, const ReflectedSolution& sol) {
    const Barrier& bar = barrier_of(data);
    KDecomposition out;
    out.dKc = NodeValues(tree.size(), 0.0);
    out.dKd = NodeValues(tree.size(), 0.0);
    const std::size_t K = tree.steps();
    for (std::size_t k = 0; k < K; ++k) {
        const bool flagged = bar.flagged(k + 1);
        for (std::size_t u = tree.layer_begin(k); u < tree.layer_end(k); ++u) {
            const double dk = sol.dK[u];
            if (dk == 0.0) {
                continue;
            }
            bool jump = false;
            if (flagged) {
                const double cont = expect_children(tree, u, sol.base.y) + driver_increment(tree, data, sol.base, u);
                const double overshoot = violation(cont, bar.level[u], bar.side);
                jump = std::abs(dk - overshoot) <= 1e-10;
            }
            (jump ? out.dKd : out.dKc)[u] = dk;
        }
    }
    out.Kc = accumulate(tree, out.dKc);
    out.Kd = accumulate(tree, out.dKd);
    return out;
}

void apply_decomposition(const ScenarioTree& tree, const ProblemData& data, ReflectedSolution& sol) {
    auto parts = decompose_K(tree, data, sol);
    sol.dKc = std::move(parts.dKc);
    sol.dKd = std::move(parts.dKd);
}

AuxiliaryDiagnostics solve_auxiliary(const ScenarioTree& tree, const ProblemData& data, const PenalizedSolution& pen) {
    const double n = pen.n;
    const Barrier* bar = data.barrier ? &*data.barrier : nullptr;
    if (n > 0.0 && bar == nullptr) {
        throw Error(ErrorCode::missing_barrier, "the problem has no barrier");
    }
    const std::size_t K = tree.steps();
    const std::size_t interior = tree.layer_begin(K);
    // Y^n dominates Ybar^n from above for a lower barrier and from below for an upper one.
    const double orient = bar != nullptr && bar->side == Side::upper ? -1.0 : 1.0;
    auto level = [&](std::size_t u) { return bar == nullptr ? 0.0 : bar->level[u]; };

    // Per-node source c_u = f dt + g dA + n dt L_u and discount D_u = 1 / (1 + n dt).
    std::vector<double> source(interior), discount(interior), barrier_source(interior);
    for (std::size_t u = 0; u < interior; ++u) {
        const double dt = tree.step_of(u);
        discount[u] = 1.0 / (1.0 + n * dt);
        barrier_source[u] = n * dt * level(u);
        source[u] = driver_increment(tree, data, pen.sol, u) + barrier_source[u];
    }

    AuxiliaryDiagnostics out;
    out.n = n;
    out.ybar = NodeValues(tree.size());
    for (std::size_t u = interior; u < tree.size(); ++u) {
        out.ybar[u] = data.xi[u];
    }
    for (std::size_t k = K; k-- > 0;) {
        for (std::size_t u = tree.layer_begin(k); u < tree.layer_end(k); ++u) {
            out.ybar[u] = (expect_children(tree, u, out.ybar) + source[u]) * discount[u];
        }
    }

    // Independent evaluation by walking every path below each node.
    struct Frame {
        std::size_t node;
        double prob;
        double disc;
        double run;
        double run_l;
    };
    out.ybar_repr = NodeValues(tree.size());
    out.X = NodeValues(tree.size());
    std::vector<Frame> stack;
    for (std::size_t u = 0; u < tree.size(); ++u) {
        double acc = 0.0;
        double acc_l = 0.0;
        stack.clear();
        stack.push_back({u, 1.0, 1.0, 0.0, 0.0});
        while (!stack.empty()) {
            Frame f = stack.back();
            stack.pop_back();
            const auto& node = tree.node(f.node);
            if (node.first_child == npos) {
                acc += f.prob * (f.run + f.disc * data.xi[f.node]);
                acc_l += f.prob * (f.run_l + f.disc * level(f.node));
                continue;
            }
            const double disc = f.disc * discount[f.node];
            const double run = f.run + disc * source[f.node];
            const double run_l = f.run_l + disc * barrier_source[f.node];
            const auto& law = tree.law(node.layer);
            for (std::size_t i = 0; i < law.size(); ++i) {
                stack.push_back({node.first_child + i, f.prob * law[i].prob, disc, run, run_l});
            }
        }
        out.ybar_repr[u] = acc;
        out.X[u] = acc_l - level(u);
    }

    out.representation_residual = max_abs_diff(out.ybar, out.ybar_repr);
    out.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < tree.size(); ++u) {
        out.min_gap = std::min(out.min_gap, orient * (pen.sol.y[u] - out.ybar[u]));
    }
    if (bar != nullptr) {
        out.sup_neg_y = sup_violation(tree, pen.sol.y, *bar);
        out.sup_neg_ybar = sup_violation(tree, out.ybar, *bar);
    }
    return out;
}

AuxiliaryDiagnostics solve_auxiliary(const ScenarioTree& tree, const ProblemData& data, double n) {
    return solve_auxiliary(tree, data, solve_penalized(tree, data, n));
}

std::vector<std::string> ConvergenceReport::csv_header() {
    return {"n",      "sup_neg_part", "sup_diff_prev", "skorokhod_residual",     "norm_Y",         "norm_Z",
            "norm_V", "norm_M",       "norm_K",        "monotonicity_violation", "max_diff_direct"};
}

ConvergenceReport penalization_sweep(const ScenarioTree& tree, const ProblemData& data,
                                     const std::vector<double>& n_list, double tol) {
    if (n_list.empty()) {
        throw Error(ErrorCode::invalid_schedule, "the n-list is empty");
    }
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        if (!(n_list[i] > 0.0) || (i > 0 && !(n_list[i] > n_list[i - 1]))) {
            throw Error(ErrorCode::invalid_schedule,
                        "the n-list must be positive and strictly increasing (entry " + std::to_string(i) + ")");
        }
    }
    const Barrier& bar = barrier_of(data);
    ConvergenceReport rep;
    rep.direct = solve_reflected_direct(tree, data, bar.side);
    const WeightedNormConfig cfg{data.mu, 1.0};
    // The penalized solutions increase with n for a lower barrier, decrease for an upper one.
    const double orient = bar.side == Side::lower ? 1.0 : -1.0;

    for (double n : n_list) {
        PenalizedSolution pen = solve_penalized(tree, data, n);
        ConvergenceRow row;
        row.n = n;
        row.sup_neg_part = sup_violation(tree, pen.sol.y, bar);
        row.skorokhod_residual = check_skorokhod(tree, pen.sol.y, bar, pen.dK);
        row.norm_y = weighted_norm(tree, pen.sol.y, Space::S2muA, cfg);
        row.norm_z = weighted_norm(tree, pen.sol.z, Space::M2mu_dt, cfg, VectorMetric::euclidean);
        row.norm_v = weighted_norm(tree, pen.sol.v, Space::M2mu_dt, cfg, VectorMetric::q_weighted);
        NodeValues dm = pen.sol.dm;
        dm[0] = 0.0;
        row.norm_m = weighted_norm(tree, dm, Space::M2mart, cfg);
        row.norm_k = weighted_norm(tree, pen.K, Space::K, cfg);
        row.max_diff_direct = max_abs_diff(pen.sol.y, rep.direct.base.y);
        if (!rep.solutions.empty()) {
            const auto& prev = rep.solutions.back().sol.y;
            row.sup_diff_prev = max_abs_diff(pen.sol.y, prev);
            for (std::size_t u = 0; u < tree.size(); ++u) {
                row.monotonicity_violation =
                    std::max(row.monotonicity_violation, orient * (prev[u] - pen.sol.y[u]));
            }
            const auto& last = rep.rows.back();
            if (last.sup_neg_part > 0.0 ? !(row.sup_neg_part < last.sup_neg_part) : row.sup_neg_part != 0.0) {
                rep.sup_neg_decreasing = false;
            }
        }
        rep.max_monotonicity_violation = std::max(rep.max_monotonicity_violation, row.monotonicity_violation);
        rep.rows.push_back(row);
        rep.solutions.push_back(std::move(pen));
    }

    if (rep.rows.size() >= 2) {
        const auto& a = rep.rows[rep.rows.size() - 2];
        const auto& b = rep.rows.back();
        auto stable = [](double x, double y) {
            if (x == 0.0 && y == 0.0) return true;
            if (x == 0.0 || y == 0.0) return false;
            const double r = y / x;
            return r >= 0.5 && r <= 2.0;
        };
        rep.norms_stable = stable(a.norm_y, b.norm_y) && stable(a.norm_z, b.norm_z) && stable(a.norm_v, b.norm_v) &&
                           stable(a.norm_m, b.norm_m) && stable(a.norm_k, b.norm_k);
        bool cauchy = true;
        for (std::size_t i = 2; i < rep.rows.size(); ++i) {
            if (rep.rows[i].sup_diff_prev > rep.rows[i - 1].sup_diff_prev) cauchy = false;
        }
        rep.converged = b.sup_neg_part <= tol && cauchy;
    } else {
        rep.converged = rep.rows.back().sup_neg_part <= tol;
    }
    return rep;
}

}  // namespace grbsde
