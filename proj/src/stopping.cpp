#include "grbsde/stopping.hpp"

#include "grbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace grbsde {

namespace {

const Barrier& barrier_of(const ProblemData& data) {
    if (!data.barrier) {
        throw Error(ErrorCode::missing_barrier, "optimal stopping needs a barrier");
    }
    return *data.barrier;
}

void check_start(const ScenarioTree& tree, std::size_t start) {
    if (start > tree.steps()) {
        throw Error(ErrorCode::invalid_stopping_time,
                    "start layer " + std::to_string(start) + " is beyond the horizon layer " +
                        std::to_string(tree.steps()));
    }
}

// Payoff when stopping at w: xi at the horizon, the barrier before.
double payoff(const ScenarioTree& tree, const ProblemData& data, std::size_t w) {
    return tree.is_leaf(w) ? data.xi[w] : data.barrier->level[w];
}

// J on the subtree of w under the rule `stop`.
double value_below(const ScenarioTree& tree, const ProblemData& data, const NodeValues& reward,
                   const std::vector<std::uint8_t>& stop, std::size_t w) {
    const auto& n = tree.node(w);
    if (n.first_child == npos || stop[w]) {
        return payoff(tree, data, w);
    }
    const auto& law = tree.law(n.layer);
    double acc = 0.0;
    for (std::size_t i = 0; i < law.size(); ++i) {
        acc += law[i].prob * value_below(tree, data, reward, stop, n.first_child + i);
    }
    return reward[w] + acc;
}

}  // namespace

StoppingTime StoppingTime::at_layer(const ScenarioTree& tree, std::size_t start, std::size_t layer) {
    check_start(tree, start);
    if (layer < start || layer > tree.steps()) {
        throw Error(ErrorCode::invalid_stopping_time, "stopping layer outside [start, K]");
    }
    StoppingTime tau;
    tau.start_layer = start;
    tau.stop.assign(tree.size(), 0);
    for (std::size_t u = tree.layer_begin(layer); u < tree.layer_end(layer); ++u) {
        tau.stop[u] = 1;
    }
    for (std::size_t u = tree.layer_begin(tree.steps()); u < tree.size(); ++u) {
        tau.stop[u] = 1;
    }
    return tau;
}

StoppingTime StoppingTime::from_leaf_layers(const ScenarioTree& tree, std::size_t start,
                                            const std::vector<std::size_t>& layers) {
    check_start(tree, start);
    const std::size_t K = tree.steps();
    const std::size_t first_leaf = tree.layer_begin(K);
    if (layers.size() != tree.layer_size(K)) {
        throw Error(ErrorCode::invalid_stopping_time,
                    "expected " + std::to_string(tree.layer_size(K)) + " path entries, got " +
                        std::to_string(layers.size()));
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i] < start || layers[i] > K) {
            throw Error(ErrorCode::invalid_stopping_time,
                        "path " + std::to_string(i) + " stops at layer " + std::to_string(layers[i]) +
                            ", outside [start, K]");
        }
    }
    // Leaves below a node form a contiguous block; track the min and max stopping layer on it.
    std::vector<std::size_t> lo(tree.size()), hi(tree.size());
    for (std::size_t u = first_leaf; u < tree.size(); ++u) {
        lo[u] = hi[u] = layers[u - first_leaf];
    }
    StoppingTime tau;
    tau.start_layer = start;
    tau.stop.assign(tree.size(), 0);
    for (std::size_t u = first_leaf; u < tree.size(); ++u) {
        tau.stop[u] = 1;
    }
    for (std::size_t k = K; k-- > 0;) {
        for (std::size_t u = tree.layer_begin(k); u < tree.layer_end(k); ++u) {
            const auto& n = tree.node(u);
            lo[u] = std::numeric_limits<std::size_t>::max();
            hi[u] = 0;
            for (std::size_t i = 0; i < tree.branching(); ++i) {
                lo[u] = std::min(lo[u], lo[n.first_child + i]);
                hi[u] = std::max(hi[u], hi[n.first_child + i]);
            }
            if (k < start || lo[u] < k) {
                continue;
            }
            if (lo[u] == k && hi[u] > k) {
                throw Error(ErrorCode::invalid_stopping_time,
                            "paths through node " + std::to_string(u) +
                                " disagree on stopping there; the rule is not adapted");
            }
            tau.stop[u] = lo[u] == k ? 1 : 0;
        }
    }
    return tau;
}

std::size_t StoppingTime::stop_layer(const ScenarioTree& tree, std::size_t leaf) const {
    std::size_t layer = tree.node(leaf).layer;
    for (std::size_t w = leaf; w != npos; w = tree.node(w).parent) {
        const auto& n = tree.node(w);
        if (n.layer < start_layer) {
            break;
        }
        if (stop[w]) {
            layer = n.layer;
        }
    }
    return layer;
}

NodeValues running_reward(const ScenarioTree& tree, const ProblemData& data, const GBSDESolution& sol) {
    NodeValues r(tree.size());
    const std::size_t interior = tree.layer_begin(tree.steps());
    for (std::size_t u = 0; u < interior; ++u) {
        const auto& n = tree.node(u);
        r[u] = evaluate_f(tree, data, u, sol.y[u], sol.z[u], sol.v[u]) * tree.grid().step(n.layer) +
               evaluate_g(tree, data, u, sol.y[u]) * n.da;
    }
    return r;
}

NodeValues snell_envelope(const ScenarioTree& tree, const ProblemData& data, const GBSDESolution& frozen) {
    const Barrier& bar = barrier_of(data);
    const NodeValues reward = running_reward(tree, data, frozen);
    const std::size_t K = tree.steps();
    NodeValues s(tree.size());
    for (std::size_t u = tree.layer_begin(K); u < tree.size(); ++u) {
        s[u] = data.xi[u];
    }
    for (std::size_t k = K; k-- > 0;) {
        for (std::size_t u = tree.layer_begin(k); u < tree.layer_end(k); ++u) {
            const double cont = expect_children(tree, u, s) + reward[u];
            s[u] = bar.side == Side::lower ? std::max(bar.level[u], cont) : std::min(bar.level[u], cont);
        }
    }
    return s;
}

NodeValues evaluate_stopping(const ScenarioTree& tree, const ProblemData& data, const StoppingTime& tau,
                             const GBSDESolution& frozen) {
    barrier_of(data);
    check_start(tree, tau.start_layer);
    if (tau.stop.size() != tree.size()) {
        throw Error(ErrorCode::invalid_stopping_time, "the rule must assign a decision to every node");
    }
    const NodeValues reward = running_reward(tree, data, frozen);
    NodeValues out(tree.size());
    const std::size_t t = tau.start_layer;
    for (std::size_t u = tree.layer_begin(t); u < tree.layer_end(t); ++u) {
        out[u] = value_below(tree, data, reward, tau.stop, u);
    }
    return out;
}

double count_policies(const ScenarioTree& tree, std::size_t node) {
    const auto& n = tree.node(node);
    if (n.first_child == npos) {
        return 1.0;
    }
    double prod = 1.0;
    for (std::size_t i = 0; i < tree.branching(); ++i) {
        prod *= count_policies(tree, n.first_child + i);
        if (!std::isfinite(prod)) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return 1.0 + prod;
}

double count_stopping_times(const ScenarioTree& tree, std::size_t t) {
    check_start(tree, t);
    double prod = 1.0;
    for (std::size_t u = tree.layer_begin(t); u < tree.layer_end(t); ++u) {
        prod *= count_policies(tree, u);
        if (!std::isfinite(prod)) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return prod;
}

namespace {

void generate(const ScenarioTree& tree, std::vector<std::size_t>& pending, StoppingTime& tau,
              const std::function<void(const StoppingTime&)>& visit) {
    if (pending.empty()) {
        visit(tau);
        return;
    }
    const std::size_t w = pending.back();
    pending.pop_back();
    const auto& n = tree.node(w);
    tau.stop[w] = 1;
    generate(tree, pending, tau, visit);
    if (n.first_child != npos) {
        tau.stop[w] = 0;
        const std::size_t mark = pending.size();
        for (std::size_t i = tree.branching(); i-- > 0;) {
            pending.push_back(n.first_child + i);
        }
        generate(tree, pending, tau, visit);
        pending.resize(mark);
    }
    tau.stop[w] = n.first_child == npos ? 1 : 0;
    pending.push_back(w);
}

void too_large(double count, double cap) {
    throw Error(ErrorCode::enumeration_too_large,
                std::to_string(count) + " stopping times exceed the cap of " + std::to_string(cap) +
                    "; use the nu_p method instead");
}

}  // namespace

void for_each_policy(const ScenarioTree& tree, std::size_t node, double cap,
                     const std::function<void(const StoppingTime&)>& visit) {
    const double count = count_policies(tree, node);
    if (count > cap) {
        too_large(count, cap);
    }
    StoppingTime tau;
    tau.start_layer = tree.node(node).layer;
    tau.stop.assign(tree.size(), 0);
    for (std::size_t u = tree.layer_begin(tree.steps()); u < tree.size(); ++u) {
        tau.stop[u] = 1;
    }
    std::vector<std::size_t> pending{node};
    generate(tree, pending, tau, visit);
}

std::vector<StoppingTime> enumerate_stopping_times(const ScenarioTree& tree, std::size_t t, double cap) {
    const double count = count_stopping_times(tree, t);
    if (count > cap) {
        too_large(count, cap);
    }
    StoppingTime tau;
    tau.start_layer = t;
    tau.stop.assign(tree.size(), 0);
    for (std::size_t u = tree.layer_begin(tree.steps()); u < tree.size(); ++u) {
        tau.stop[u] = 1;
    }
    std::vector<std::size_t> pending;
    for (std::size_t u = tree.layer_end(t); u-- > tree.layer_begin(t);) {
        pending.push_back(u);
    }
    std::vector<StoppingTime> out;
    out.reserve(static_cast<std::size_t>(count));
    generate(tree, pending, tau, [&](const StoppingTime& s) { out.push_back(s); });
    return out;
}

StoppingTime optimal_nu_p(const ScenarioTree& tree, const ProblemData& data, const NodeValues& y, double p,
                          std::size_t t) {
    const Barrier& bar = barrier_of(data);
    check_start(tree, t);
    if (!(p >= 1.0)) {
        throw Error(ErrorCode::invalid_stopping_time, "p must be at least 1");
    }
    StoppingTime tau;
    tau.start_layer = t;
    tau.stop.assign(tree.size(), 0);
    for (std::size_t u = tree.layer_begin(t); u < tree.size(); ++u) {
        const bool hit = bar.side == Side::lower ? y[u] <= bar.level[u] + 1.0 / p : y[u] >= bar.level[u] - 1.0 / p;
        tau.stop[u] = (hit || tree.is_leaf(u)) ? 1 : 0;
    }
    return tau;
}

std::string method_name(StopMethod m) {
    return m == StopMethod::enumerate ? "enumerate" : "nu_p";
}

StopMethod parse_method(const std::string& s) {
    if (s == "enumerate") return StopMethod::enumerate;
    if (s == "nu_p") return StopMethod::nu_p;
    throw Error(ErrorCode::config_error, "unknown stopping method '" + s + "' (expected enumerate or nu_p)");
}

StoppingValueReport verify_representation(const ScenarioTree& tree, const ProblemData& data,
                                          const ReflectedSolution& sol, StopMethod method, std::size_t t,
                                          const std::vector<double>& p_list, double cap, double tol) {
    const Barrier& bar = barrier_of(data);
    check_start(tree, t);
    StoppingValueReport rep;
    rep.method = method;
    rep.side = bar.side;
    rep.start_layer = t;
    const double orient = bar.side == Side::lower ? 1.0 : -1.0;
    const NodeValues& y = sol.base.y;
    const NodeValues reward = running_reward(tree, data, sol.base);
    rep.max_dominance = -std::numeric_limits<double>::infinity();

    if (method == StopMethod::enumerate) {
        for (std::size_t u = tree.layer_begin(t); u < tree.layer_end(t); ++u) {
            const double count = count_policies(tree, u);
            if (count > cap) {
                too_large(count, cap);
            }
        }
        for (std::size_t u = tree.layer_begin(t); u < tree.layer_end(t); ++u) {
            NodeStopRow row;
            row.node = u;
            row.y = y[u];
            row.best = -orient * std::numeric_limits<double>::infinity();
            std::size_t id = 0;
            for_each_policy(tree, u, cap, [&](const StoppingTime& tau) {
                const double j = value_below(tree, data, reward, tau.stop, u);
                const double gap = orient * (y[u] - j);
                rep.policies.push_back({id++, u, 0.0, j, gap});
                rep.max_dominance = std::max(rep.max_dominance, -gap);
                row.best = orient > 0 ? std::max(row.best, j) : std::min(row.best, j);
            });
            row.policies = static_cast<double>(id);
            row.gap = std::abs(row.best - row.y);
            rep.max_gap = std::max(rep.max_gap, row.gap);
            rep.nodes.push_back(row);
        }
        rep.passed = rep.max_gap <= tol && rep.max_dominance <= tol;
        return rep;
    }

    if (p_list.empty()) {
        throw Error(ErrorCode::config_error, "the nu_p method needs at least one p");
    }
    rep.max_nu_p_excess = -std::numeric_limits<double>::infinity();
    rep.min_nu_p_gap = std::numeric_limits<double>::infinity();
    std::vector<double> last(tree.size());
    std::size_t id = 0;
    for (double p : p_list) {
        const StoppingTime tau = optimal_nu_p(tree, data, y, p, t);
        for (std::size_t u = tree.layer_begin(t); u < tree.layer_end(t); ++u) {
            const double j = value_below(tree, data, reward, tau.stop, u);
            const double gap = orient * (y[u] - j);
            rep.policies.push_back({id, u, p, j, gap});
            rep.max_dominance = std::max(rep.max_dominance, -gap);
            rep.max_nu_p_excess = std::max(rep.max_nu_p_excess, gap - 1.0 / p);
            rep.min_nu_p_gap = std::min(rep.min_nu_p_gap, gap);
            last[u] = j;
        }
        ++id;
    }
    for (std::size_t u = tree.layer_begin(t); u < tree.layer_end(t); ++u) {
        rep.nodes.push_back({u, y[u], last[u], std::abs(last[u] - y[u]), static_cast<double>(p_list.size())});
        rep.max_gap = std::max(rep.max_gap, std::abs(last[u] - y[u]));
    }
    rep.passed = rep.min_nu_p_gap >= -tol && rep.max_nu_p_excess <= tol;
    return rep;
}

}  // namespace grbsde
