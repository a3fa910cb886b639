#include "grbsde/random.hpp"

#include <algorithm>
#include <cmath>

namespace grbsde {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

bool coin(std::mt19937_64& rng, double p) {
    return uniform(rng, 0.0, 1.0) < p;
}

double node_count(std::size_t branching, std::size_t steps) {
    double total = 0.0;
    double layer = 1.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        total += layer;
        layer *= static_cast<double>(branching);
    }
    return total;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double scale) {
    std::vector<double> out(n);
    for (auto& x : out) {
        x = uniform(rng, -scale, scale);
    }
    return out;
}

// Adapted random field built from the state of a node.
StateFunction random_field(const ScenarioTree& tree, std::mt19937_64& rng, double scale) {
    const std::size_t d = tree.brownian_dims();
    const std::size_t m = tree.mark_count();
    auto base = StateFunction::affine(uniform(rng, -scale, scale), uniform(rng, -scale, scale),
                                      random_vector(rng, d, scale), random_vector(rng, m, 0.5 * scale),
                                      random_vector(rng, m, 0.5 * scale), tree.has_extra_factor() ? uniform(rng, -scale, scale) : 0.0,
                                      uniform(rng, -0.5 * scale, 0.5 * scale), 0.0);
    if (d > 0 && coin(rng, 0.4)) {
        auto payoff = StateFunction::put(uniform(rng, 0.8, 1.2), 1.0, uniform(rng, 0.1, 0.6), 0.0, pick(rng, 0, d - 1));
        return StateFunction::sum({std::move(base), StateFunction::scaled(uniform(rng, 0.5, 2.0), std::move(payoff))});
    }
    return base;
}

StateFunction nonnegative_field(const ScenarioTree& tree, std::mt19937_64& rng, double scale) {
    return StateFunction::sum(
        {StateFunction::constant(uniform(rng, 0.0, scale)), StateFunction::abs(random_field(tree, rng, 0.5 * scale))});
}

double max_step(const ScenarioTree& tree) {
    double out = 0.0;
    for (std::size_t k = 0; k < tree.steps(); ++k) {
        out = std::max(out, tree.grid().step(k));
    }
    return out;
}

}  // namespace

TreeConfig random_tree_config(std::mt19937_64& rng, const RandomTreeLimits& limits) {
    TreeConfig cfg;
    std::size_t steps = pick(rng, limits.min_steps, limits.max_steps);
    std::size_t dims = pick(rng, 0, limits.max_dims);
    std::size_t marks = pick(rng, 0, limits.max_marks);
    if (dims + marks == 0) {
        dims = 1;
    }
    bool extra = limits.allow_extra && coin(rng, 0.3);
    auto branching = [&] { return std::size_t{1} << (dims + marks + (extra ? 1 : 0)); };
    while (node_count(branching(), steps) > static_cast<double>(limits.max_nodes)) {
        if (extra) {
            extra = false;
        } else if (steps > 1 && steps > limits.min_steps) {
            --steps;
        } else if (marks > 0) {
            --marks;
        } else if (dims > 1) {
            --dims;
        } else {
            --steps;
        }
    }

    const double horizon = uniform(rng, 0.5, 1.5);
    std::vector<double> t(steps + 1, 0.0);
    if (limits.nonuniform_grid && coin(rng, 0.5)) {
        std::vector<double> w(steps);
        double total = 0.0;
        for (auto& x : w) {
            x = uniform(rng, 0.5, 1.5);
            total += x;
        }
        for (std::size_t k = 0; k < steps; ++k) {
            t[k + 1] = t[k] + horizon * w[k] / total;
        }
        t.back() = horizon;
        cfg.grid = TimeGrid(t);
    } else {
        cfg.grid = TimeGrid::uniform(steps, horizon);
    }
    double dt_max = 0.0;
    for (std::size_t k = 0; k < steps; ++k) {
        dt_max = std::max(dt_max, cfg.grid.step(k));
    }

    cfg.brownian_dims = dims;
    cfg.extra_factor = extra;
    for (std::size_t j = 0; j < marks; ++j) {
        cfg.marks.push_back({"e" + std::to_string(j + 1), uniform(rng, 0.5, 1.5), uniform(rng, 0.1, 0.4 / dt_max)});
    }
    cfg.a_schedule = ASchedule{};
    cfg.a_schedule.increments.assign(steps, 0.0);
    if (limits.allow_a) {
        const double r = uniform(rng, 0.0, 1.0);
        if (r < 0.4) {
            for (auto& x : cfg.a_schedule.increments) {
                x = coin(rng, 0.8) ? uniform(rng, 0.0, 0.5) : 0.0;
            }
        } else if (r < 0.7 && marks > 0) {
            cfg.a_schedule.kind = ASchedule::Kind::mark_driven;
            cfg.a_schedule.increments.clear();
            cfg.a_schedule.rate = uniform(rng, 0.0, 0.5);
            for (std::size_t j = 0; j < marks; ++j) {
                cfg.a_schedule.jump_weights.push_back(uniform(rng, 0.0, 0.5));
            }
        }
    }
    cfg.max_nodes = std::max<std::size_t>(limits.max_nodes, 1);
    return cfg;
}

ProblemData random_problem(const ScenarioTree& tree, std::mt19937_64& rng, const RandomProblemOptions& opts) {
    const std::size_t d = tree.brownian_dims();
    const std::size_t m = tree.mark_count();
    const double dt = max_step(tree);
    ProblemData data;
    Driver& drv = data.driver;

    drv.form = opts.allow_cubic && coin(rng, 0.3) ? DriverForm::cubic : DriverForm::linear;
    if (drv.form == DriverForm::cubic) {
        drv.cubic = uniform(rng, 0.0, 0.5);
    }
    drv.a = uniform(rng, -1.0, 0.5);
    if (!opts.zv_free) {
        // |b|_1 sqrt(dt) <= 0.25 keeps the Brownian part of the one-step weights positive.
        const double budget = 0.25 / std::sqrt(dt);
        drv.b.resize(d);
        for (auto& x : drv.b) {
            x = uniform(rng, -1.0, 1.0) * (budget / static_cast<double>(std::max<std::size_t>(d, 1)));
        }
        drv.c.resize(m);
        for (auto& x : drv.c) {
            x = uniform(rng, 0.0, 0.5);
        }
    } else {
        drv.b.assign(d, 0.0);
        drv.c.assign(m, 0.0);
    }
    const StateFunction h = random_field(tree, rng, 0.5);
    drv.h = h.tabulate(tree);
    drv.g_slope = uniform(rng, -1.0, -0.1);
    const StateFunction g_shift = random_field(tree, rng, 0.5);
    drv.g_shift = g_shift.tabulate(tree);

    drv.alpha = drv.a;
    drv.beta = drv.g_slope;
    double zl = 0.0;
    for (double x : drv.b) zl += x * x;
    double vl = 0.0;
    for (std::size_t j = 0; j < m; ++j) vl += drv.c[j] * drv.c[j] * tree.mark_weight(j);
    drv.kappa = std::max({std::sqrt(zl) + std::sqrt(vl), std::abs(drv.a), std::abs(drv.g_slope), 0.1});
    drv.phi = StateFunction::sum({StateFunction::constant(1.0), StateFunction::abs(h)}).tabulate(tree);
    drv.psi = StateFunction::sum({StateFunction::constant(1.0), StateFunction::abs(g_shift)}).tabulate(tree);

    data.xi = random_field(tree, rng, 1.0).tabulate(tree);
    data.mu = 2.0;

    if (opts.barrier) {
        Barrier bar;
        bar.side = opts.side;
        const std::size_t K = tree.steps();
        std::vector<double> offsets(K + 1, 0.0);
        bar.jump_times.assign(K + 1, false);
        double level_shift = uniform(rng, -0.2, 0.6);
        for (std::size_t k = 0; k <= K; ++k) {
            if (opts.jump_flags && k > 0 && coin(rng, 0.3)) {
                bar.jump_times[k] = true;
                level_shift -= uniform(rng, 0.2, 1.0);
            }
            offsets[k] = level_shift;
        }
        auto raw = StateFunction::sum({random_field(tree, rng, 0.7), StateFunction::table(offsets)});
        bar.level = raw.tabulate(tree);
        if (opts.side == Side::upper) {
            for (auto& x : bar.level.raw()) x = -x;
        }
        // Terminal compatibility: L_T <= xi (U_T >= xi).
        for (std::size_t u = tree.layer_begin(K); u < tree.size(); ++u) {
            bar.level[u] = opts.side == Side::lower ? std::min(bar.level[u], data.xi[u])
                                                    : std::max(bar.level[u], data.xi[u]);
        }
        data.barrier = std::move(bar);
    }
    return data;
}

std::pair<ProblemData, ProblemData> random_ordered_pair(const ScenarioTree& tree, std::mt19937_64& rng,
                                                        const RandomProblemOptions& opts) {
    ProblemData first = random_problem(tree, rng, opts);
    ProblemData second = first;
    const std::size_t K = tree.steps();

    const NodeValues dxi = nonnegative_field(tree, rng, 0.5).tabulate(tree);
    for (std::size_t u = tree.layer_begin(K); u < tree.size(); ++u) {
        second.xi[u] += dxi[u];
    }
    if (coin(rng, 0.7)) {
        const NodeValues dh = nonnegative_field(tree, rng, 0.5).tabulate(tree);
        for (std::size_t u = 0; u < tree.size(); ++u) {
            second.driver.h[u] += dh[u];
            second.driver.phi[u] += dh[u];
        }
    }
    if (coin(rng, 0.7)) {
        const NodeValues dg = nonnegative_field(tree, rng, 0.5).tabulate(tree);
        for (std::size_t u = 0; u < tree.size(); ++u) {
            second.driver.g_shift[u] += dg[u];
            second.driver.psi[u] += dg[u];
        }
    }
    if (second.barrier && !opts.zv_free && coin(rng, 0.5)) {
        const NodeValues dl = nonnegative_field(tree, rng, 0.3).tabulate(tree);
        const bool lower = second.barrier->side == Side::lower;
        for (std::size_t u = 0; u < tree.size(); ++u) {
            double& l = second.barrier->level[u];
            l += dl[u];
            if (u >= tree.layer_begin(K)) {
                l = lower ? std::min(l, second.xi[u]) : std::max(l, second.xi[u]);
            }
        }
    }
    return {std::move(first), std::move(second)};
}

}  // namespace grbsde
