#include "grbsde/gbsde.hpp"

#include "grbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace grbsde {

namespace {

/// Root of a strictly increasing h: bracket around `center` with doubling radius, then bisect
/// until the bracket collapses and finish with one interpolation step.
template <class H>
double solve_increasing(H&& h, double center) {
    const double scale = std::max(1.0, std::abs(center));
    double radius = scale;
    double lo = center - radius;
    double hi = center + radius;
    double hlo = h(lo);
    double hhi = h(hi);
    for (int expand = 0; !(hlo <= 0.0 && hhi >= 0.0); ++expand) {
        if (expand > 200 || !std::isfinite(hlo) || !std::isfinite(hhi)) {
            throw Error(ErrorCode::solver_failure,
                        "could not bracket the implicit step around " + std::to_string(center));
        }
        radius *= 2.0;
        lo = center - radius;
        hi = center + radius;
        hlo = h(lo);
        hhi = h(hi);
    }
    if (hlo == 0.0) return lo;
    if (hhi == 0.0) return hi;

    const double min_width = 1e-18 * std::max(scale, radius);
    for (int it = 0; it < 4000 && hi - lo > min_width; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) {
            break;
        }
        const double hm = h(mid);
        if (hm == 0.0) {
            return mid;
        }
        if (hm < 0.0) {
            lo = mid;
            hlo = hm;
        } else {
            hi = mid;
            hhi = hm;
        }
    }
    double best = -hlo < hhi ? lo : hi;
    double best_res = std::min(-hlo, hhi);
    const double x = lo - hlo * (hi - lo) / (hhi - hlo);
    if (x > lo && x < hi) {
        const double hx = std::abs(h(x));
        if (hx < best_res) {
            best = x;
        }
    }
    return best;
}

const Barrier& require_barrier(const ProblemData& data, std::optional<Side> side) {
    if (!data.barrier) {
        throw Error(ErrorCode::missing_barrier, "the problem has no barrier");
    }
    if (side && data.barrier->side != *side) {
        throw Error(ErrorCode::missing_barrier,
                    std::string("the problem has no ") + (*side == Side::lower ? "lower" : "upper") + " barrier");
    }
    return *data.barrier;
}

}  // namespace

StepResult backward_step(const ScenarioTree& tree, const ProblemData& data, std::size_t node,
                         const NodeValues& next, const StepOptions& opts) {
    const auto& n = tree.node(node);
    if (n.first_child == npos) {
        throw Error(ErrorCode::incomplete_process, "node " + std::to_string(node) + " is terminal");
    }
    const double dt = tree.grid().step(n.layer);
    const double da = n.da;
    const auto& drv = data.driver;
    const double margin = 1.0 - drv.alpha * dt - drv.beta * da;
    if (!(margin > 0.0)) {
        throw Error(ErrorCode::non_monotone_step,
                    "1 - alpha*dt - beta*dA = " + std::to_string(margin) + " at node " + std::to_string(node) +
                        "; use a smaller step");
    }

    const auto& law = tree.law(n.layer);
    const double mean = expect_children(tree, node, next);
    std::vector<double> mu(law.size());
    for (std::size_t i = 0; i < law.size(); ++i) {
        mu[i] = next[n.first_child + i] - mean;
    }
    auto dec = martingale_decompose(tree, node, mu);

    StepResult out;
    out.z = std::move(dec.z);
    out.v = std::move(dec.v);
    out.dm = std::move(dec.residual);

    const std::vector<double>& z_in = opts.frozen_z ? opts.frozen_z->at(node) : out.z;
    const std::vector<double>& v_in = opts.frozen_v ? opts.frozen_v->at(node) : out.v;

    auto drift = [&](double y) {
        return evaluate_f(tree, data, node, y, z_in, v_in) * dt + evaluate_g(tree, data, node, y) * da;
    };

    const Barrier* penalty_barrier = nullptr;
    if (opts.penalty > 0.0) {
        penalty_barrier = &require_barrier(data, std::nullopt);
    }
    auto penalty = [&](double y) {
        if (penalty_barrier == nullptr) {
            return 0.0;
        }
        const double level = penalty_barrier->level[node];
        return penalty_barrier->side == Side::lower ? opts.penalty * std::max(level - y, 0.0) * dt
                                                    : -opts.penalty * std::max(y - level, 0.0) * dt;
    };

    auto h = [&](double y) { return y - drift(y) - penalty(y) - mean; };
    const double root = solve_increasing(h, mean);

    out.y = root;
    if (penalty_barrier != nullptr) {
        out.dk = std::abs(penalty(root));
        out.residual = std::abs(h(root));
    } else if (opts.reflect) {
        const Barrier& bar = require_barrier(data, opts.reflect);
        const double level = bar.level[node];
        if (std::isnan(level)) {
            throw Error(ErrorCode::incomplete_process, "barrier undefined on node " + std::to_string(node));
        }
        if (bar.side == Side::lower && level > root) {
            out.y = level;
            out.dk = out.y - drift(out.y) - mean;
        } else if (bar.side == Side::upper && level < root) {
            out.y = level;
            out.dk = mean + drift(out.y) - out.y;
        }
        const double sign = bar.side == Side::lower ? 1.0 : -1.0;
        out.residual = std::abs(out.y - drift(out.y) - mean - sign * out.dk);
    } else {
        out.residual = std::abs(h(root));
    }
    return out;
}

NodeVectors zero_vectors(const ScenarioTree& tree, std::size_t dim) {
    NodeVectors out(tree.size());
    const std::size_t interior = tree.layer_begin(tree.steps());
    for (std::size_t u = 0; u < interior; ++u) {
        out[u].assign(dim, 0.0);
    }
    return out;
}

GBSDESolution backward_sweep(const ScenarioTree& tree, const ProblemData& data, const StepOptions& opts,
                             NodeValues* dk) {
    const std::size_t K = tree.steps();
    GBSDESolution sol;
    sol.y = NodeValues(tree.size());
    sol.z.assign(tree.size(), {});
    sol.v.assign(tree.size(), {});
    sol.dm = NodeValues(tree.size());
    sol.residual = NodeValues(tree.size());
    if (dk != nullptr) {
        *dk = NodeValues(tree.size());
    }
    if (opts.reflect) {
        require_barrier(data, opts.reflect);
    }
    for (std::size_t u = tree.layer_begin(K); u < tree.size(); ++u) {
        if (!data.xi.defined(u)) {
            throw Error(ErrorCode::incomplete_process, "terminal condition undefined on node " + std::to_string(u));
        }
        sol.y[u] = data.xi[u];
        sol.residual[u] = 0.0;
    }
    for (std::size_t k = K; k-- > 0;) {
        for (std::size_t u = tree.layer_begin(k); u < tree.layer_end(k); ++u) {
            auto step = backward_step(tree, data, u, sol.y, opts);
            sol.y[u] = step.y;
            sol.residual[u] = step.residual;
            const std::size_t first = tree.node(u).first_child;
            for (std::size_t i = 0; i < step.dm.size(); ++i) {
                sol.dm[first + i] = step.dm[i];
            }
            sol.z[u] = std::move(step.z);
            sol.v[u] = std::move(step.v);
            if (dk != nullptr) {
                (*dk)[u] = step.dk;
            }
        }
    }
    return sol;
}

GBSDESolution solve_gbsde(const ScenarioTree& tree, const ProblemData& data) {
    return backward_sweep(tree, data, StepOptions{});
}

double iterate_distance(const ScenarioTree& tree, const PicardIterate& a, const PicardIterate& b,
                        const WeightedNormConfig& norm) {
    NodeValues dy(tree.size()), ddm(tree.size());
    NodeVectors dz(tree.size()), dv(tree.size());
    for (std::size_t u = 0; u < tree.size(); ++u) {
        dy[u] = a.y[u] - b.y[u];
        ddm[u] = a.dm.defined(u) ? a.dm[u] - b.dm[u] : 0.0;
        dz[u] = a.z[u];
        for (std::size_t i = 0; i < dz[u].size(); ++i) dz[u][i] -= b.z[u][i];
        dv[u] = a.v[u];
        for (std::size_t j = 0; j < dv[u].size(); ++j) dv[u][j] -= b.v[u][j];
    }
    return contraction_norm(tree, dy, dz, dv, ddm, norm);
}

PicardResult picard_solve(const ScenarioTree& tree, const ProblemData& data, const NodeVectors& z0,
                          const NodeVectors& v0, std::size_t max_iters, double tol,
                          const WeightedNormConfig& norm, std::optional<Side> reflect) {
    if (z0.size() != tree.size() || v0.size() != tree.size()) {
        throw Error(ErrorCode::incomplete_process, "initial (Z, V) must be shaped like the tree");
    }
    PicardResult result;
    NodeVectors frozen_z = z0;
    NodeVectors frozen_v = v0;

    for (std::size_t i = 0; i < max_iters; ++i) {
        StepOptions opts;
        opts.frozen_z = &frozen_z;
        opts.frozen_v = &frozen_v;
        opts.reflect = reflect;
        GBSDESolution sol = backward_sweep(tree, data, opts);
        PicardIterate it{sol.y, sol.z, sol.v, sol.dm};
        if (!result.history.empty()) {
            const double d = iterate_distance(tree, it, result.history.back(), norm);
            result.diff_norms.push_back(d);
            if (!result.converged && d <= tol) {
                result.converged = true;
                result.iterations = result.history.size();
            }
        }
        frozen_z = it.z;
        frozen_v = it.v;
        result.history.push_back(std::move(it));
        result.solution = std::move(sol);
        if (result.converged && result.history.size() >= 3) {
            break;
        }
    }
    if (!result.converged) {
        result.iterations = result.history.size();
    }
    return result;
}

}  // namespace grbsde
