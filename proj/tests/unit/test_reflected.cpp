#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace grbsde;
using support::error_of;
using support::layer_values;
using support::max_abs_diff;
using support::tree_config;

namespace {

Barrier lower_barrier(NodeValues level, std::vector<bool> flags = {}) {
    Barrier b;
    b.side = Side::lower;
    b.level = std::move(level);
    b.jump_times = std::move(flags);
    return b;
}

// L_t = 1 - t, f = g = 0, xi = 0 on a one-dimensional Brownian tree.
ProblemData linear_barrier_problem(const ScenarioTree& tree) {
    auto data = zero_problem(tree);
    data.barrier = lower_barrier(StateFunction::affine(1.0, -1.0, {0.0}, {}, {}, 0.0, 0.0, 0.0).tabulate(tree));
    return data;
}

}  // namespace

TEST_CASE("one penalized step below the barrier has the closed form 5/12") {
    const auto tree = support::deterministic_tree(1, 0.5);
    auto data = zero_problem(tree);
    data.barrier = lower_barrier(layer_values(tree, {0.5, 0.0}));
    const auto pen = solve_penalized(tree, data, 10.0);
    CHECK(pen.sol.y[0] == doctest::Approx(5.0 / 12.0).epsilon(1e-14));
    CHECK(pen.dK[0] == doctest::Approx(10.0 * (0.5 - 5.0 / 12.0) * 0.5).epsilon(1e-13));
    CHECK(pen.K[1] == pen.dK[0]);
}

TEST_CASE("an inactive penalty reproduces the unreflected solution") {
    const auto tree = build_tree(tree_config(3, 1.0, 1));
    auto data = zero_problem(tree);
    data.xi = NodeValues(tree.size(), 2.0);
    data.barrier = lower_barrier(NodeValues(tree.size(), 1.0));
    const auto pen = solve_penalized(tree, data, 100.0);
    const auto free = solve_gbsde(tree, data);
    CHECK(max_abs_diff(pen.sol.y, free.y) == 0.0);
    for (std::size_t u = 0; u < tree.size(); ++u) CHECK(pen.K[u] == 0.0);
}

TEST_CASE("penalized solutions increase with n") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 10; ++i) {
        const auto tree = build_tree(random_tree_config(rng));
        const auto data = random_problem(tree, rng);
        const auto a = solve_penalized(tree, data, 5.0);
        const auto b = solve_penalized(tree, data, 50.0);
        for (std::size_t u = 0; u < tree.size(); ++u) CHECK(b.sol.y[u] >= a.sol.y[u] - 1e-10);
    }
}

TEST_CASE("penalization needs a barrier and a nonnegative level") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    const auto data = zero_problem(tree);
    CHECK(error_of([&] { solve_penalized(tree, data, 1.0); }) == ErrorCode::missing_barrier);
    CHECK(error_of([&] { solve_penalized(tree, linear_barrier_problem(tree), -1.0); }) ==
          ErrorCode::invalid_schedule);
    // n = 0 is the plain equation and needs no barrier.
    CHECK(solve_penalized(tree, data, 0.0).sol.y[0] == 0.0);
}

TEST_CASE("penalization with L = 1 - t: the barrier violation strictly decreases in n") {
    const auto tree = build_tree(tree_config(4, 1.0, 1));
    const auto rep = penalization_sweep(tree, linear_barrier_problem(tree), {1.0, 10.0, 100.0}, 1e-10);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].sup_neg_part > rep.rows[1].sup_neg_part);
    CHECK(rep.rows[1].sup_neg_part > rep.rows[2].sup_neg_part);
    CHECK(rep.sup_neg_decreasing);
    CHECK(rep.max_monotonicity_violation <= 1e-10);
    CHECK(rep.rows[0].sup_diff_prev == 0.0);
}

TEST_CASE("a barrier that is never active leaves every diagnostic at zero") {
    const auto tree = build_tree(tree_config(3, 1.0, 1));
    auto data = zero_problem(tree);
    data.barrier = lower_barrier(NodeValues(tree.size(), -5.0));
    const auto rep = penalization_sweep(tree, data, {1.0, 10.0, 100.0}, 1e-10);
    for (const auto& r : rep.rows) {
        CHECK(r.sup_neg_part == 0.0);
        CHECK(r.sup_diff_prev == 0.0);
        CHECK(r.skorokhod_residual == 0.0);
        CHECK(r.norm_k == 0.0);
        CHECK(r.monotonicity_violation == 0.0);
        CHECK(r.max_diff_direct == 0.0);
    }
}

TEST_CASE("penalized solutions approach the direct solution from below") {
    const auto tree = build_tree(tree_config(4, 1.0, 1));
    const auto data = linear_barrier_problem(tree);
    const auto rep = penalization_sweep(tree, data, {1.0, 10.0, 100.0, 1000.0}, 1e-10);
    const auto& last = rep.rows.back();
    CHECK(last.max_diff_direct <= 10.0 * last.sup_neg_part);
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        CHECK(rep.rows[i].max_diff_direct < rep.rows[i - 1].max_diff_direct);
    }
    for (const auto& s : rep.solutions) {
        for (std::size_t u = 0; u < tree.size(); ++u) CHECK(s.sol.y[u] <= rep.direct.base.y[u] + 1e-10);
    }
}

TEST_CASE("n-lists must be positive and strictly increasing") {
    const auto tree = build_tree(tree_config(2, 1.0, 1));
    const auto data = linear_barrier_problem(tree);
    CHECK(error_of([&] { penalization_sweep(tree, data, {10.0, 1.0}, 1e-10); }) == ErrorCode::invalid_schedule);
    CHECK(error_of([&] { penalization_sweep(tree, data, {1.0, 1.0}, 1e-10); }) == ErrorCode::invalid_schedule);
    CHECK(error_of([&] { penalization_sweep(tree, data, {}, 1e-10); }) == ErrorCode::invalid_schedule);
}

TEST_CASE("the auxiliary equation with n = 0 is the plain equation") {
    std::mt19937_64 rng(4);
    const auto tree = build_tree(random_tree_config(rng));
    const auto data = random_problem(tree, rng);
    const auto aux = solve_auxiliary(tree, data, 0.0);
    const auto free = solve_gbsde(tree, data);
    CHECK(max_abs_diff(aux.ybar, free.y) <= 1e-12);
    CHECK(aux.representation_residual <= 1e-10);
}

TEST_CASE("one auxiliary step with L = 1, dt = 1, n = 9 gives 0.9") {
    const auto tree = support::deterministic_tree(1, 1.0);
    auto data = zero_problem(tree);
    data.barrier = lower_barrier(layer_values(tree, {1.0, 0.0}));
    const auto aux = solve_auxiliary(tree, data, 9.0);
    CHECK(aux.ybar[0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(aux.ybar_repr[0] == doctest::Approx(0.9).epsilon(1e-15));
    // X = n dt L / (1 + n dt) + L_T / (1 + n dt) - L_0 = 0.9 + 0 - 1
    CHECK(aux.X[0] == doctest::Approx(-0.1).epsilon(1e-14));
}

TEST_CASE("the penalized solution dominates the auxiliary one on generated problems") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 15; ++i) {
        const auto tree = build_tree(random_tree_config(rng));
        RandomProblemOptions opts;
        opts.side = i % 2 ? Side::upper : Side::lower;
        const auto data = random_problem(tree, rng, opts);
        for (double n : {1.0, 30.0, 1000.0}) {
            const auto aux = solve_auxiliary(tree, data, n);
            CHECK(aux.min_gap >= -1e-10);
            CHECK(aux.representation_residual <= 1e-10);
        }
    }
}

TEST_CASE("direct reflection on a deterministic falling barrier") {
    const auto tree = support::deterministic_tree(2, 1.0);
    auto data = zero_problem(tree);
    data.barrier = lower_barrier(layer_values(tree, {1.0, 0.5, 0.0}));
    const auto sol = solve_reflected_direct(tree, data, Side::lower);
    CHECK(sol.base.y[0] == 1.0);
    CHECK(sol.base.y[1] == 0.5);
    CHECK(sol.base.y[2] == 0.0);
    CHECK(sol.dK[0] == doctest::Approx(0.5));
    CHECK(sol.dK[1] == doctest::Approx(0.5));
    CHECK(sol.K[2] == doctest::Approx(1.0));
    CHECK(sol.skorokhod_residual == 0.0);
}

TEST_CASE("a barrier at -1e9 changes nothing") {
    std::mt19937_64 rng(31);
    const auto tree = build_tree(random_tree_config(rng));
    RandomProblemOptions opts;
    opts.barrier = false;
    auto data = random_problem(tree, rng, opts);
    data.barrier = lower_barrier(NodeValues(tree.size(), -1e9));
    const auto sol = solve_reflected_direct(tree, data, Side::lower);
    const auto free = solve_gbsde(tree, data);
    CHECK(max_abs_diff(sol.base.y, free.y) == 0.0);
    for (std::size_t u = 0; u < tree.size(); ++u) CHECK(sol.K[u] == 0.0);
}

TEST_CASE("upper reflection is the mirrored lower reflection") {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 10; ++i) {
        const auto tree = build_tree(random_tree_config(rng));
        RandomProblemOptions opts;
        opts.side = Side::upper;
        opts.allow_cubic = true;
        const auto data = random_problem(tree, rng, opts);
        const auto up = solve_reflected_direct(tree, data, Side::upper);
        const auto low = solve_reflected_direct(tree, mirror(data), Side::lower);
        for (std::size_t u = 0; u < tree.size(); ++u) {
            CHECK(std::abs(up.base.y[u] + low.base.y[u]) <= 1e-10);
            CHECK(std::abs(up.K[u] - low.K[u]) <= 1e-10);
        }
    }
}

TEST_CASE("reflection needs a barrier") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    CHECK(error_of([&] { solve_reflected_direct(tree, zero_problem(tree), Side::lower); }) ==
          ErrorCode::missing_barrier);
}

TEST_CASE("without flagged jumps the whole of K is continuous") {
    const auto tree = support::deterministic_tree(2, 1.0);
    auto data = zero_problem(tree);
    data.barrier = lower_barrier(layer_values(tree, {1.0, 0.5, 0.0}));
    auto sol = solve_reflected_direct(tree, data, Side::lower);
    const auto parts = decompose_K(tree, data, sol);
    for (std::size_t u = 0; u < tree.size(); ++u) {
        CHECK(parts.Kd[u] == 0.0);
        CHECK(parts.Kc[u] == sol.K[u]);
    }
}

TEST_CASE("a flagged barrier drop puts its push into the jump part") {
    const auto tree = build_tree(tree_config(3, 1.0, 1));
    auto data = zero_problem(tree);
    // High barrier up to t_1 that drops at t_2.
    data.barrier = lower_barrier(layer_values(tree, {0.2, 0.8, -0.5, -0.5}), {false, false, true, false});
    auto sol = solve_reflected_direct(tree, data, Side::lower);
    apply_decomposition(tree, data, sol);
    double jump = 0.0;
    for (std::size_t u = 0; u < tree.size(); ++u) {
        CHECK(sol.dKc[u] + sol.dKd[u] == sol.dK[u]);
        if (tree.node(u).layer == 1) {
            CHECK(sol.dK[u] > 0.0);
            CHECK(sol.dKd[u] == sol.dK[u]);
        } else {
            CHECK(sol.dKd[u] == 0.0);
        }
        jump += sol.dKd[u];
    }
    CHECK(jump > 0.0);
    const auto parts = decompose_K(tree, data, sol);
    for (std::size_t u = 0; u < tree.size(); ++u) CHECK(parts.Kc[u] + parts.Kd[u] == doctest::Approx(sol.K[u]));
}

TEST_CASE("K = 0 splits into two zero parts") {
    const auto tree = build_tree(tree_config(2, 1.0, 1));
    auto data = zero_problem(tree);
    data.barrier = lower_barrier(NodeValues(tree.size(), -1.0), {false, true, true});
    const auto sol = solve_reflected_direct(tree, data, Side::lower);
    const auto parts = decompose_K(tree, data, sol);
    for (std::size_t u = 0; u < tree.size(); ++u) {
        CHECK(parts.Kc[u] == 0.0);
        CHECK(parts.Kd[u] == 0.0);
    }
}

TEST_CASE("Skorokhod residual: zero for direct solutions, positive and decreasing for penalized ones") {
    const auto tree = build_tree(tree_config(4, 1.0, 1));
    const auto data = linear_barrier_problem(tree);
    const auto direct = solve_reflected_direct(tree, data, Side::lower);
    CHECK(direct.skorokhod_residual <= 1e-10);
    CHECK(check_skorokhod(tree, direct.base.y, *data.barrier, NodeValues(tree.size(), 0.0)) == 0.0);
    const auto rep = penalization_sweep(tree, data, {1.0, 10.0, 100.0}, 1e-10);
    CHECK(rep.rows[0].skorokhod_residual > 0.0);
    CHECK(rep.rows[1].skorokhod_residual < rep.rows[0].skorokhod_residual);
    CHECK(rep.rows[2].skorokhod_residual < rep.rows[1].skorokhod_residual);
}

TEST_CASE("direct solutions satisfy every reflected invariant on generated problems") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 20; ++i) {
        const auto tree = build_tree(random_tree_config(rng));
        RandomProblemOptions opts;
        opts.side = i % 2 ? Side::upper : Side::lower;
        opts.allow_cubic = i % 3 == 0;
        const auto data = random_problem(tree, rng, opts);
        const double orient = opts.side == Side::lower ? 1.0 : -1.0;
        const auto sol = solve_reflected_direct(tree, data, opts.side);
        const auto free = solve_gbsde(tree, data);
        CHECK(sol.skorokhod_residual <= 1e-10);
        for (std::size_t u = 0; u < tree.size(); ++u) {
            CHECK(orient * (sol.base.y[u] - data.barrier->level[u]) >= 0.0);
            CHECK(sol.dK[u] >= 0.0);
            CHECK(orient * (sol.base.y[u] - free.y[u]) >= -1e-10);
            if (tree.is_leaf(u)) continue;
            const double rhs = expect_children(tree, u, sol.base.y) +
                               evaluate_f(tree, data, u, sol.base.y[u], sol.base.z[u], sol.base.v[u]) *
                                   tree.step_of(u) +
                               evaluate_g(tree, data, u, sol.base.y[u]) * tree.node(u).da + orient * sol.dK[u];
            CHECK(std::abs(sol.base.y[u] - rhs) <= 1e-12);
            for (std::size_t c = 0; c < tree.branching(); ++c) {
                CHECK(sol.K[tree.node(u).first_child + c] >= sol.K[u]);
            }
        }
    }
}

TEST_CASE("norms along the n-list stay bounded and stabilize") {
    const auto tree = build_tree(tree_config(4, 1.0, 1, {{"e1", 1.0, 0.5}}));
    auto data = linear_barrier_problem(tree);
    data.driver.b = {0.2};
    data.driver.c = {0.3};
    data.driver.kappa = 0.5;
    data.xi = StateFunction::put(1.0, 1.0, 0.3, 0.0, 0).tabulate(tree);
    const auto rep = penalization_sweep(tree, data, {1.0, 10.0, 100.0, 1000.0, 10000.0}, 1e-3);
    for (const auto& r : rep.rows) {
        CHECK(std::isfinite(r.norm_y));
        CHECK(std::isfinite(r.norm_k));
    }
    CHECK(rep.norms_stable);
    CHECK(rep.rows.back().sup_neg_part <= 1e-3);
    CHECK(rep.converged);
}
