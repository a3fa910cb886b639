#include "grbsde/scenario.hpp"

#include "grbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace grbsde {

TimeGrid::TimeGrid(std::vector<double> instants) : instants_(std::move(instants)) {
    if (instants_.size() < 2) {
        throw Error(ErrorCode::empty_grid, "a time grid needs at least one step");
    }
    if (instants_.front() != 0.0) {
        throw Error(ErrorCode::invalid_grid, "the grid must start at t_0 = 0");
    }
    for (std::size_t k = 0; k + 1 < instants_.size(); ++k) {
        if (!(instants_[k + 1] > instants_[k])) {
            throw Error(ErrorCode::invalid_grid,
                        "grid instants must be strictly increasing (step " + std::to_string(k) + ")");
        }
    }
}

TimeGrid TimeGrid::uniform(std::size_t steps, double horizon) {
    if (steps == 0) {
        throw Error(ErrorCode::empty_grid, "K = 0 steps");
    }
    if (!(horizon > 0.0)) {
        throw Error(ErrorCode::invalid_grid, "horizon must be positive");
    }
    std::vector<double> t(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        t[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
    }
    t.back() = horizon;
    return TimeGrid(std::move(t));
}

namespace {

std::vector<BranchIncrement> product_law(double dt, std::size_t dims, const std::vector<Mark>& marks,
                                         bool extra) {
    const double sq = std::sqrt(dt);
    std::vector<BranchIncrement> law(1);
    law[0].prob = 1.0;

    // Rademacher +-sqrt(dt) per Brownian dimension.
    for (std::size_t i = 0; i < dims; ++i) {
        std::vector<BranchIncrement> next;
        next.reserve(law.size() * 2);
        for (const auto& b : law) {
            for (double s : {sq, -sq}) {
                BranchIncrement c = b;
                c.prob *= 0.5;
                c.dB.push_back(s);
                next.push_back(std::move(c));
            }
        }
        law = std::move(next);
    }
    // Bernoulli(q dt) per mark, compensated.
    for (const auto& mark : marks) {
        const double p = mark.weight * dt;
        std::vector<BranchIncrement> next;
        next.reserve(law.size() * 2);
        for (const auto& b : law) {
            for (int hit : {1, 0}) {
                BranchIncrement c = b;
                c.prob *= hit ? p : 1.0 - p;
                c.arrivals.push_back(hit);
                c.dN.push_back(static_cast<double>(hit) - p);
                next.push_back(std::move(c));
            }
        }
        law = std::move(next);
    }
    if (extra) {
        std::vector<BranchIncrement> next;
        next.reserve(law.size() * 2);
        for (const auto& b : law) {
            for (double s : {1.0, -1.0}) {
                BranchIncrement c = b;
                c.prob *= 0.5;
                c.dm = s;
                next.push_back(std::move(c));
            }
        }
        law = std::move(next);
    }
    return law;
}

}  // namespace

ScenarioTree build_tree(const TreeConfig& cfg) {
    const std::size_t steps = cfg.grid.steps();
    if (steps == 0) {
        throw Error(ErrorCode::empty_grid, "K = 0 steps");
    }
    for (std::size_t j = 0; j < cfg.marks.size(); ++j) {
        const double q = cfg.marks[j].weight;
        if (!(q >= 0.0) || !std::isfinite(q)) {
            throw Error(ErrorCode::invalid_intensity,
                        "marks[" + std::to_string(j) + "]: weight must be finite and >= 0");
        }
        for (std::size_t k = 0; k < steps; ++k) {
            if (q * cfg.grid.step(k) >= 1.0) {
                throw Error(ErrorCode::invalid_intensity,
                            "marks[" + std::to_string(j) + "]: q*dt = " +
                                std::to_string(q * cfg.grid.step(k)) + " >= 1 at step " +
                                std::to_string(k));
            }
        }
    }
    const auto& sched = cfg.a_schedule;
    if (sched.kind == ASchedule::Kind::deterministic) {
        if (!sched.increments.empty() && sched.increments.size() != steps) {
            throw Error(ErrorCode::invalid_a_schedule, "deterministic A schedule needs one increment per step");
        }
        for (double d : sched.increments) {
            if (!(d >= 0.0) || !std::isfinite(d)) {
                throw Error(ErrorCode::invalid_a_schedule, "A increments must be finite and >= 0");
            }
        }
    } else {
        if (!(sched.rate >= 0.0) || !std::isfinite(sched.rate)) {
            throw Error(ErrorCode::invalid_a_schedule, "A rate must be finite and >= 0");
        }
        if (sched.jump_weights.size() != cfg.marks.size()) {
            throw Error(ErrorCode::invalid_a_schedule, "mark-driven A needs one jump weight per mark");
        }
        for (double w : sched.jump_weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw Error(ErrorCode::invalid_a_schedule, "A jump weights must be finite and >= 0");
            }
        }
    }

    ScenarioTree tree;
    tree.grid_ = cfg.grid;
    tree.dims_ = cfg.brownian_dims;
    tree.marks_ = cfg.marks;
    tree.extra_ = cfg.extra_factor;
    tree.laws_.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        tree.laws_.push_back(product_law(cfg.grid.step(k), cfg.brownian_dims, cfg.marks, cfg.extra_factor));
    }
    tree.branching_ = tree.laws_.front().size();

    // Layer sizes b^k, guarded against overflow and the node budget.
    tree.layer_offsets_.assign(1, 0);
    std::size_t width = 1;
    std::size_t total = 0;
    for (std::size_t k = 0; k <= steps; ++k) {
        if (total > cfg.max_nodes || width > cfg.max_nodes - total) {
            throw Error(ErrorCode::tree_too_large,
                        "tree exceeds " + std::to_string(cfg.max_nodes) + " nodes");
        }
        total += width;
        tree.layer_offsets_.push_back(total);
        if (k < steps) {
            if (width > cfg.max_nodes / tree.branching_ + 1) {
                throw Error(ErrorCode::tree_too_large,
                            "tree exceeds " + std::to_string(cfg.max_nodes) + " nodes");
            }
            width *= tree.branching_;
        }
    }

    tree.nodes_.resize(total);
    auto& root = tree.nodes_[0];
    root.w.assign(cfg.brownian_dims, 0.0);
    root.counts.assign(cfg.marks.size(), 0);

    auto increment_of = [&](std::size_t k, const TreeNode& n, const BranchIncrement* in) {
        if (sched.kind == ASchedule::Kind::deterministic) {
            return sched.increments.empty() ? 0.0 : sched.increments[k];
        }
        double d = sched.rate * cfg.grid.step(k);
        if (in != nullptr) {
            for (std::size_t j = 0; j < in->arrivals.size(); ++j) {
                d += sched.jump_weights[j] * in->arrivals[j];
            }
        }
        (void)n;
        return d;
    };

    for (std::size_t k = 0; k < steps; ++k) {
        const auto& law = tree.laws_[k];
        const std::size_t begin = tree.layer_offsets_[k];
        const std::size_t end = tree.layer_offsets_[k + 1];
        for (std::size_t u = begin; u < end; ++u) {
            auto& parent = tree.nodes_[u];
            const BranchIncrement* in = parent.parent == npos ? nullptr
                                                                : &tree.laws_[k - 1][parent.branch];
            parent.da = increment_of(k, parent, in);
            parent.first_child = end + (u - begin) * law.size();
            for (std::size_t i = 0; i < law.size(); ++i) {
                const auto& b = law[i];
                auto& c = tree.nodes_[parent.first_child + i];
                c.layer = k + 1;
                c.parent = u;
                c.branch = i;
                c.prob = parent.prob * b.prob;
                c.a = parent.a + parent.da;
                c.w = parent.w;
                for (std::size_t d = 0; d < b.dB.size(); ++d) {
                    c.w[d] += b.dB[d];
                }
                c.counts = parent.counts;
                for (std::size_t j = 0; j < b.arrivals.size(); ++j) {
                    c.counts[j] += b.arrivals[j];
                }
                c.x = parent.x + b.dm;
            }
        }
    }
    return tree;
}

const BranchIncrement& ScenarioTree::edge(std::size_t child) const {
    const auto& n = node(child);
    if (n.parent == npos) {
        throw Error(ErrorCode::incomplete_process, "the root has no incoming edge");
    }
    return laws_.at(n.layer - 1).at(n.branch);
}

bool NodeValues::defined(std::size_t id) const {
    return id < values_.size() && !std::isnan(values_[id]);
}

bool NodeValues::defined_on_layer(const ScenarioTree& tree, std::size_t k) const {
    for (std::size_t u = tree.layer_begin(k); u < tree.layer_end(k); ++u) {
        if (!defined(u)) {
            return false;
        }
    }
    return true;
}

double expect_children(const ScenarioTree& tree, std::size_t node, const NodeValues& x) {
    const auto& n = tree.node(node);
    if (n.first_child == npos) {
        throw Error(ErrorCode::incomplete_process, "node " + std::to_string(node) + " is a leaf");
    }
    const auto& law = tree.law(n.layer);
    double acc = 0.0;
    for (std::size_t i = 0; i < law.size(); ++i) {
        const std::size_t c = n.first_child + i;
        if (!x.defined(c)) {
            throw Error(ErrorCode::incomplete_process,
                        "missing value on child " + std::to_string(c) + " of node " + std::to_string(node));
        }
        acc += law[i].prob * x[c];
    }
    return acc;
}

NodeValues conditional_expectation(const ScenarioTree& tree, const NodeValues& x, std::size_t k) {
    if (k >= tree.steps()) {
        throw Error(ErrorCode::incomplete_process, "layer " + std::to_string(k) + " has no successor layer");
    }
    NodeValues out(tree.size());
    for (std::size_t u = tree.layer_begin(k); u < tree.layer_end(k); ++u) {
        out[u] = expect_children(tree, u, x);
    }
    return out;
}

MartingaleDecomposition martingale_decompose(const ScenarioTree& tree, std::size_t node,
                                             std::span<const double> mu) {
    const auto& n = tree.node(node);
    if (n.first_child == npos) {
        throw Error(ErrorCode::incomplete_process, "node " + std::to_string(node) + " is a leaf");
    }
    const auto& law = tree.law(n.layer);
    if (mu.size() != law.size()) {
        throw Error(ErrorCode::incomplete_process,
                    "expected " + std::to_string(law.size()) + " child values, got " + std::to_string(mu.size()));
    }
    double mean = 0.0;
    double scale = 1.0;
    for (std::size_t i = 0; i < law.size(); ++i) {
        mean += law[i].prob * mu[i];
        scale = std::max(scale, std::abs(mu[i]));
    }
    if (std::abs(mean) > 1e-12 * scale) {
        throw Error(ErrorCode::not_a_martingale_increment,
                    "child values have mean " + std::to_string(mean) + " at node " + std::to_string(node));
    }

    const double dt = tree.grid().step(n.layer);
    const std::size_t d = tree.brownian_dims();
    const std::size_t m = tree.mark_count();
    MartingaleDecomposition out;
    out.z.assign(d, 0.0);
    out.v.assign(m, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < law.size(); ++i) {
            acc += law[i].prob * mu[i] * law[i].dB[j];
        }
        out.z[j] = acc / dt;
    }
    for (std::size_t j = 0; j < m; ++j) {
        double cross = 0.0;
        double second = 0.0;
        for (std::size_t i = 0; i < law.size(); ++i) {
            cross += law[i].prob * mu[i] * law[i].dN[j];
            second += law[i].prob * law[i].dN[j] * law[i].dN[j];
        }
        // q_j = 0 leaves dN_j identically zero; nothing to project on.
        out.v[j] = second > 0.0 ? cross / second : 0.0;
    }
    out.residual.resize(law.size());
    for (std::size_t i = 0; i < law.size(); ++i) {
        double r = mu[i];
        for (std::size_t j = 0; j < d; ++j) {
            r -= out.z[j] * law[i].dB[j];
        }
        for (std::size_t j = 0; j < m; ++j) {
            r -= out.v[j] * law[i].dN[j];
        }
        out.residual[i] = r;
    }
    return out;
}

}  // namespace grbsde
