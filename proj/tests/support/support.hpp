#pragma once

#include "grbsde/analysis.hpp"
#include "grbsde/config.hpp"
#include "grbsde/experiment.hpp"
#include "grbsde/gbsde.hpp"
#include "grbsde/model.hpp"
#include "grbsde/random.hpp"
#include "grbsde/reflected.hpp"
#include "grbsde/scenario.hpp"
#include "grbsde/stopping.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace support {

using namespace grbsde;

inline TreeConfig tree_config(std::size_t steps, double horizon, std::size_t dims, std::vector<Mark> marks = {},
                              bool extra = false) {
    TreeConfig cfg;
    cfg.grid = TimeGrid::uniform(steps, horizon);
    cfg.brownian_dims = dims;
    cfg.marks = std::move(marks);
    cfg.extra_factor = extra;
    cfg.a_schedule.increments.assign(steps, 0.0);
    return cfg;
}

/// Single path (no branching): every layer has one node.
inline ScenarioTree deterministic_tree(std::size_t steps, double horizon) {
    return build_tree(tree_config(steps, horizon, 0));
}

inline NodeValues constant_values(const ScenarioTree& tree, double c) { return NodeValues(tree.size(), c); }

/// Per-layer values.
inline NodeValues layer_values(const ScenarioTree& tree, const std::vector<double>& v) {
    return StateFunction::table(v).tabulate(tree);
}

inline double max_abs_diff(const NodeValues& a, const NodeValues& b) {
    double m = 0.0;
    for (std::size_t u = 0; u < a.size(); ++u) m = std::max(m, std::abs(a[u] - b[u]));
    return m;
}

/// Code of the grbsde::Error thrown by f, or nullopt when nothing (or something else) is thrown.
template <class F>
std::optional<ErrorCode> error_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    } catch (...) {
    }
    return std::nullopt;
}

}  // namespace support
