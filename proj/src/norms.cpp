#include "grbsde/norms.hpp"

#include "grbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace grbsde {

Space parse_space(std::string_view id) {
    if (id == "S2muA") return Space::S2muA;
    if (id == "M2mu_dt") return Space::M2mu_dt;
    if (id == "M2mu_dA") return Space::M2mu_dA;
    if (id == "M2mart") return Space::M2mart;
    if (id == "K") return Space::K;
    throw Error(ErrorCode::invalid_space, "unknown space id '" + std::string(id) + "'");
}

std::string_view space_name(Space s) noexcept {
    switch (s) {
    case Space::S2muA: return "S2muA";
    case Space::M2mu_dt: return "M2mu_dt";
    case Space::M2mu_dA: return "M2mu_dA";
    case Space::M2mart: return "M2mart";
    case Space::K: return "K";
    }
    return "?";
}

double step_weight(const ScenarioTree& tree, std::size_t u, double gamma, double mu) {
    const auto& n = tree.node(u);
    return std::exp(gamma * tree.grid().time(n.layer + 1) + mu * (n.a + n.da));
}

namespace {

void require(const NodeValues& x, std::size_t u) {
    if (!x.defined(u)) {
        throw Error(ErrorCode::incomplete_process, "component undefined on node " + std::to_string(u));
    }
}

double sq_norm(const ScenarioTree& tree, const std::vector<double>& x, VectorMetric metric) {
    double acc = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double w = metric == VectorMetric::q_weighted ? tree.mark_weight(j) : 1.0;
        acc += w * x[j] * x[j];
    }
    return acc;
}

// E[ sum over interior nodes of weight(u) * sq(u) * measure(u) ].
template <class Sq>
double interior_sum(const ScenarioTree& tree, Space space, const WeightedNormConfig& cfg, Sq sq) {
    double acc = 0.0;
    const std::size_t interior = tree.layer_begin(tree.steps());
    for (std::size_t u = 0; u < interior; ++u) {
        const auto& n = tree.node(u);
        const double measure = space == Space::M2mu_dt ? tree.grid().step(n.layer) : n.da;
        if (measure == 0.0) {
            continue;
        }
        acc += n.prob * step_weight(tree, u, 0.0, cfg.mu) * sq(u) * measure;
    }
    return acc;
}

}  // namespace

double weighted_norm(const ScenarioTree& tree, const NodeValues& x, Space space, const WeightedNormConfig& cfg) {
    const std::size_t K = tree.steps();
    switch (space) {
    case Space::S2muA: {
        // Running max of e^{mu A}|Y|^2 carried down each path.
        std::vector<double> running(tree.size(), 0.0);
        double sup_part = 0.0;
        for (std::size_t u = 0; u < tree.size(); ++u) {
            require(x, u);
            const auto& n = tree.node(u);
            const double here = std::exp(cfg.mu * n.a) * x[u] * x[u];
            running[u] = n.parent == npos ? here : std::max(running[n.parent], here);
            if (n.layer == K) {
                sup_part += n.prob * running[u];
            }
        }
        const double da_part = interior_sum(tree, Space::M2mu_dA, cfg, [&](std::size_t u) { return x[u] * x[u]; });
        return sup_part + da_part;
    }
    case Space::M2mu_dt:
    case Space::M2mu_dA:
        return interior_sum(tree, space, cfg, [&](std::size_t u) {
            require(x, u);
            return x[u] * x[u];
        });
    case Space::M2mart: {
        double acc = 0.0;
        for (std::size_t c = 1; c < tree.size(); ++c) {
            require(x, c);
            const auto& n = tree.node(c);
            acc += n.prob * std::exp(cfg.mu * n.a) * x[c] * x[c];
        }
        return acc;
    }
    case Space::K: {
        double acc = 0.0;
        for (std::size_t u = tree.layer_begin(K); u < tree.size(); ++u) {
            require(x, u);
            acc += tree.node(u).prob * x[u] * x[u];
        }
        return acc;
    }
    }
    throw Error(ErrorCode::invalid_space, "unsupported space");
}

double weighted_norm(const ScenarioTree& tree, const NodeVectors& x, Space space, const WeightedNormConfig& cfg,
                     VectorMetric metric) {
    if (space != Space::M2mu_dt && space != Space::M2mu_dA) {
        throw Error(ErrorCode::invalid_space,
                    std::string(space_name(space)) + " is not defined for vector-valued components");
    }
    return interior_sum(tree, space, cfg, [&](std::size_t u) {
        if (u >= x.size()) {
            throw Error(ErrorCode::incomplete_process, "component undefined on node " + std::to_string(u));
        }
        return sq_norm(tree, x[u], metric);
    });
}

double contraction_norm(const ScenarioTree& tree, const NodeValues& y, const NodeVectors& z, const NodeVectors& v,
                        const NodeValues& dm, const WeightedNormConfig& cfg) {
    double acc = 0.0;
    const std::size_t interior = tree.layer_begin(tree.steps());
    for (std::size_t u = 0; u < interior; ++u) {
        require(y, u);
        const auto& n = tree.node(u);
        const double w = n.prob * step_weight(tree, u, cfg.gamma, cfg.mu);
        const double dt = tree.grid().step(n.layer);
        const double yy = y[u] * y[u];
        acc += w * ((yy + sq_norm(tree, z.at(u), VectorMetric::euclidean) +
                     sq_norm(tree, v.at(u), VectorMetric::q_weighted)) *
                        dt +
                    yy * n.da);
        for (std::size_t i = 0; i < tree.branching(); ++i) {
            const std::size_t c = n.first_child + i;
            require(dm, c);
            acc += tree.node(c).prob * step_weight(tree, u, cfg.gamma, cfg.mu) * dm[c] * dm[c];
        }
    }
    return acc;
}

}  // namespace grbsde
