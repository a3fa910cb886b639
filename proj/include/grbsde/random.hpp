#pragma once

#include "grbsde/model.hpp"
#include "grbsde/scenario.hpp"

#include <cstdint>
#include <random>
#include <utility>

namespace grbsde {

/// Bounds for randomly generated trees.
struct RandomTreeLimits {
    std::size_t min_steps = 2;
    std::size_t max_steps = 4;
    std::size_t max_dims = 2;
    std::size_t max_marks = 2;
    std::size_t max_nodes = 5000;
    bool allow_extra = true;
    bool allow_a = true;
    bool nonuniform_grid = true;
};

struct RandomProblemOptions {
    bool barrier = true;
    Side side = Side::lower;
    bool zv_free = false;     // b = c = 0
    bool allow_cubic = false;
    bool jump_flags = true;   // scheduled barrier drops at random layers
};

/**
 * Random tree within the limits. Mark intensities keep q dt <= 0.4 on every step so that
 * the one-step pricing weights of the generated drivers stay positive.
 */
TreeConfig random_tree_config(std::mt19937_64& rng, const RandomTreeLimits& limits = {});

/**
 * Random problem satisfying the structural assumptions with declared constants that are
 * tight or conservative: |b|_1 sqrt(dt) <= 0.25, c_j in [0, 0.5], L_T <= xi.
 */
ProblemData random_problem(const ScenarioTree& tree, std::mt19937_64& rng, const RandomProblemOptions& opts = {});

/**
 * Pair with xi <= xi', f <= f', g <= g' everywhere and L <= L' (identical barriers when
 * opts.zv_free, so that the K-increment ordering applies).
 */
std::pair<ProblemData, ProblemData> random_ordered_pair(const ScenarioTree& tree, std::mt19937_64& rng,
                                                        const RandomProblemOptions& opts = {});

}  // namespace grbsde
