#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace grbsde;
using support::error_of;
using support::tree_config;

TEST_CASE("implicit step without noise solves y = 1 - y") {
    const auto tree = support::deterministic_tree(1, 1.0);
    auto data = zero_problem(tree);
    data.driver.a = -1.0;
    data.driver.alpha = -1.0;
    const NodeValues next(tree.size(), 1.0);
    const auto r = backward_step(tree, data, 0, next);
    CHECK(r.y == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.residual <= 1e-12);
}

TEST_CASE("martingale step returns the conditional mean and the projections") {
    const auto tree = build_tree(tree_config(1, 1.0, 1, {{"e1", 1.0, 0.5}}));
    const auto data = zero_problem(tree);
    NodeValues next(tree.size());
    const auto& law = tree.law(0);
    for (std::size_t i = 0; i < law.size(); ++i) {
        next[tree.layer_begin(1) + i] = 2.0 + 0.7 * law[i].dB[0] - 1.1 * law[i].dN[0];
    }
    const auto r = backward_step(tree, data, 0, next);
    CHECK(r.y == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(r.z[0] == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(r.v[0] == doctest::Approx(-1.1).epsilon(1e-14));
    for (double m : r.dm) CHECK(std::abs(m) <= 1e-14);
}

TEST_CASE("f = -y, g = -y with dA = 1, dt = 1 and E[next] = 3 gives y = 1") {
    auto cfg = tree_config(1, 1.0, 0);
    cfg.a_schedule.increments = {1.0};
    const auto tree = build_tree(cfg);
    auto data = zero_problem(tree);
    data.driver.a = -1.0;
    data.driver.alpha = -1.0;
    data.driver.g_slope = -1.0;
    const NodeValues next(tree.size(), 3.0);
    CHECK(backward_step(tree, data, 0, next).y == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("a step violating 1 - alpha dt - beta dA > 0 is refused") {
    const auto tree = support::deterministic_tree(1, 1.0);
    auto data = zero_problem(tree);
    data.driver.a = 2.0;
    data.driver.alpha = 2.0;
    data.xi = NodeValues(tree.size(), 1.0);
    CHECK(error_of([&] { solve_gbsde(tree, data); }) == ErrorCode::non_monotone_step);
}

TEST_CASE("zero data gives the zero solution") {
    const auto tree = build_tree(tree_config(3, 1.0, 1, {{"e1", 1.0, 0.5}}, true));
    const auto sol = solve_gbsde(tree, zero_problem(tree));
    for (std::size_t u = 0; u < tree.size(); ++u) {
        CHECK(sol.y[u] == 0.0);
        if (u > 0) CHECK(sol.dm[u] == 0.0);
        if (!tree.is_leaf(u)) {
            CHECK(sol.z[u][0] == 0.0);
            CHECK(sol.v[u][0] == 0.0);
        }
    }
}

TEST_CASE("constant driver on a single path integrates the step sizes") {
    const auto tree = support::deterministic_tree(2, 1.0);
    auto data = zero_problem(tree);
    data.driver.h = NodeValues(tree.size(), 1.0);
    const auto sol = solve_gbsde(tree, data);
    CHECK(sol.y[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sol.y[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("xi = dB on one step gives Y_0 = 0 and Z_0 = 1") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    auto data = zero_problem(tree);
    data.xi = StateFunction::affine(0.0, 0.0, {1.0}, {}, {}, 0.0, 0.0, 0.0).tabulate(tree);
    const auto sol = solve_gbsde(tree, data);
    CHECK(std::abs(sol.y[0]) <= 1e-15);
    CHECK(sol.z[0][0] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("a terminal condition missing on a leaf is an incomplete process") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    auto data = zero_problem(tree);
    data.xi[tree.layer_begin(1)] = std::numeric_limits<double>::quiet_NaN();
    CHECK(error_of([&] { solve_gbsde(tree, data); }) == ErrorCode::incomplete_process);
}

TEST_CASE("generated problems satisfy the backward equation and orthogonality at every node") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 25; ++i) {
        const auto tree = build_tree(random_tree_config(rng));
        RandomProblemOptions opts;
        opts.barrier = false;
        opts.allow_cubic = true;
        const auto data = random_problem(tree, rng, opts);
        const auto sol = solve_gbsde(tree, data);
        for (std::size_t u = 0; u < tree.layer_begin(tree.steps()); ++u) {
            const double lhs = sol.y[u];
            const double rhs = expect_children(tree, u, sol.y) +
                               evaluate_f(tree, data, u, sol.y[u], sol.z[u], sol.v[u]) * tree.step_of(u) +
                               evaluate_g(tree, data, u, sol.y[u]) * tree.node(u).da;
            CHECK(std::abs(lhs - rhs) <= 1e-12);
            CHECK(sol.residual[u] <= 1e-12);
            const auto& law = tree.law(tree.node(u).layer);
            const std::size_t c0 = tree.node(u).first_child;
            double mean = 0.0;
            std::vector<double> cb(tree.brownian_dims(), 0.0), cn(tree.mark_count(), 0.0);
            for (std::size_t k = 0; k < law.size(); ++k) {
                const double m = sol.dm[c0 + k];
                mean += law[k].prob * m;
                for (std::size_t j = 0; j < cb.size(); ++j) cb[j] += law[k].prob * m * law[k].dB[j];
                for (std::size_t j = 0; j < cn.size(); ++j) cn[j] += law[k].prob * m * law[k].dN[j];
            }
            CHECK(std::abs(mean) <= 1e-12);
            for (double x : cb) CHECK(std::abs(x) <= 1e-12);
            for (double x : cn) CHECK(std::abs(x) <= 1e-12);
        }
    }
}

TEST_CASE("two sweeps on identical data agree bit for bit") {
    std::mt19937_64 rng(3);
    const auto tree = build_tree(random_tree_config(rng));
    const auto data = random_problem(tree, rng);
    const auto a = solve_gbsde(tree, data);
    const auto b = solve_gbsde(tree, data);
    for (std::size_t u = 0; u < tree.size(); ++u) CHECK(a.y[u] == b.y[u]);
}

TEST_CASE("with f = g = 0 and no extra factor Y is a martingale and M vanishes") {
    const auto tree = build_tree(tree_config(3, 1.0, 2, {{"e1", 1.0, 0.6}}));
    auto data = zero_problem(tree);
    data.xi = StateFunction::put(1.0, 1.0, 0.3, 0.0, 1).tabulate(tree);
    const auto sol = solve_gbsde(tree, data);
    for (std::size_t u = 0; u < tree.layer_begin(3); ++u) {
        CHECK(std::abs(sol.y[u] - expect_children(tree, u, sol.y)) <= 1e-15);
    }
    for (std::size_t u = 1; u < tree.size(); ++u) CHECK(std::abs(sol.dm[u]) <= 1e-12);
}

TEST_CASE("Picard converges after one application when f ignores (z, v)") {
    const auto tree = build_tree(tree_config(3, 1.0, 1, {{"e1", 1.0, 0.5}}));
    auto data = zero_problem(tree);
    data.driver.a = -0.5;
    data.driver.h = NodeValues(tree.size(), 0.3);
    data.xi = StateFunction::call(1.0, 1.0, 0.4, 0.0, 0).tabulate(tree);
    const WeightedNormConfig norm{2.0, default_gamma(data.driver)};
    const auto pic = picard_solve(tree, data, zero_vectors(tree, 1), zero_vectors(tree, 1), 20, 1e-20, norm);
    CHECK(pic.converged);
    CHECK(pic.iterations == 1);
    CHECK(pic.diff_norms.front() == 0.0);
}

TEST_CASE("Picard for f = 0.3 z contracts and reaches the direct solution") {
    const auto tree = build_tree(tree_config(4, 1.0, 1));
    auto data = zero_problem(tree);
    data.driver.b = {0.3};
    data.driver.kappa = 0.3;
    data.xi = StateFunction::put(1.0, 1.0, 0.5, 0.0, 0).tabulate(tree);
    const WeightedNormConfig norm{2.0, default_gamma(data.driver)};
    const auto pic = picard_solve(tree, data, zero_vectors(tree, 1), zero_vectors(tree, 0), 50, 1e-20, norm);
    CHECK(pic.converged);
    const auto direct = solve_gbsde(tree, data);
    CHECK(support::max_abs_diff(pic.solution.y, direct.y) <= 1e-10);
    const auto cr = contraction_rate(tree, pic, norm);
    CHECK(cr.max_ratio < 1.0);
    CHECK(cr.below_one);
}

TEST_CASE("starting Picard at the fixed point gives a zero first difference") {
    const auto tree = build_tree(tree_config(3, 1.0, 1, {{"e1", 1.0, 0.5}}));
    auto data = zero_problem(tree);
    data.driver.b = {0.4};
    data.driver.c = {0.3};
    data.driver.kappa = 0.6;
    data.xi = StateFunction::affine(0.2, 0.0, {1.0}, {0.5}, {}, 0.0, 0.0, 0.0).tabulate(tree);
    const auto direct = solve_gbsde(tree, data);
    const WeightedNormConfig norm{2.0, default_gamma(data.driver)};
    const auto pic = picard_solve(tree, data, direct.z, direct.v, 10, 1e-20, norm);
    CHECK(pic.diff_norms.front() <= 1e-26);
    CHECK(pic.converged);
}

TEST_CASE("Picard rejects initial values of the wrong shape") {
    const auto tree = build_tree(tree_config(2, 1.0, 1));
    const auto data = zero_problem(tree);
    const NodeVectors bad(3);
    CHECK(error_of([&] { picard_solve(tree, data, bad, zero_vectors(tree, 0), 5, 0.0, {}); }) ==
          ErrorCode::incomplete_process);
}
