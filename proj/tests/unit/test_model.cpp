#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace grbsde;
using support::error_of;
using support::tree_config;

namespace {

ScenarioTree tree_with_a(std::size_t steps, std::size_t dims, std::vector<Mark> marks = {}) {
    auto cfg = tree_config(steps, 1.0, dims, std::move(marks));
    cfg.a_schedule.increments.assign(steps, 0.5);
    return build_tree(cfg);
}

}  // namespace

TEST_CASE("linear driver with a = -2 at y = 3 gives -6") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    auto data = zero_problem(tree);
    data.driver.a = -2.0;
    data.driver.b = {0.0};
    CHECK(evaluate_f(tree, data, 0, 3.0, std::vector<double>{0.0}, std::vector<double>{}) == -6.0);
}

TEST_CASE("g = -y at y = 5 gives -5") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    auto data = zero_problem(tree);
    data.driver.g_slope = -1.0;
    CHECK(evaluate_g(tree, data, 0, 5.0) == -5.0);
}

TEST_CASE("cubic driver -y^3 at y = 2 gives -8") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    auto data = zero_problem(tree);
    data.driver.form = DriverForm::cubic;
    data.driver.cubic = 1.0;
    CHECK(evaluate_f(tree, data, 0, 2.0, std::vector<double>{0.0}, std::vector<double>{}) == -8.0);
}

TEST_CASE("f is linear in (z, v) with q-weighted jump coefficients") {
    const auto tree = build_tree(tree_config(1, 1.0, 1, {{"e1", 1.0, 0.4}}));
    auto data = zero_problem(tree);
    data.driver.b = {0.5};
    data.driver.c = {2.0};
    data.driver.h = NodeValues(tree.size(), 0.25);
    const double f = evaluate_f(tree, data, 0, 0.0, std::vector<double>{2.0}, std::vector<double>{3.0});
    CHECK(f == doctest::Approx(0.5 * 2.0 + 2.0 * 0.4 * 3.0 + 0.25).epsilon(1e-15));
}

TEST_CASE("wrong (z, v) lengths are dimension errors") {
    const auto tree = build_tree(tree_config(1, 1.0, 1, {{"e1", 1.0, 0.4}}));
    const auto data = zero_problem(tree);
    CHECK(error_of([&] { evaluate_f(tree, data, 0, 0.0, std::vector<double>{0.0}, std::vector<double>{}); }) ==
          ErrorCode::mark_dimension_error);
    CHECK(error_of([&] { evaluate_f(tree, data, 0, 0.0, std::vector<double>{}, std::vector<double>{0.0}); }) ==
          ErrorCode::brownian_dimension_error);
}

TEST_CASE("mirrored driver evaluates -f(-y, -z, -v) and -g(-y)") {
    const auto tree = build_tree(tree_config(1, 1.0, 1, {{"e1", 1.0, 0.4}}));
    auto data = zero_problem(tree);
    data.driver.form = DriverForm::cubic;
    data.driver.cubic = 0.5;
    data.driver.a = 0.3;
    data.driver.b = {0.7};
    data.driver.c = {0.2};
    data.driver.h = NodeValues(tree.size(), 0.1);
    data.driver.g_slope = -0.4;
    data.driver.g_shift = NodeValues(tree.size(), 0.6);
    const auto m = mirror(data);
    const std::vector<double> z{1.5}, v{-0.5}, nz{-1.5}, nv{0.5};
    CHECK(evaluate_f(tree, m, 0, 0.8, z, v) == doctest::Approx(-evaluate_f(tree, data, 0, -0.8, nz, nv)));
    CHECK(evaluate_g(tree, m, 0, 0.8) == doctest::Approx(-evaluate_g(tree, data, 0, -0.8)));
}

TEST_CASE("state functions evaluate on the node state") {
    const auto tree = build_tree(tree_config(2, 1.0, 1));
    const std::size_t up = tree.node(0).first_child;  // dB = +sqrt(0.5)
    const double w = tree.node(up).w[0];
    CHECK(w == doctest::Approx(std::sqrt(0.5)));
    CHECK(StateFunction::constant(2.5)(tree, up) == 2.5);
    CHECK(StateFunction::affine(1.0, 2.0, {3.0}, {}, {}, 0.0, 0.0, 0.0)(tree, up) ==
          doctest::Approx(1.0 + 2.0 * 0.5 + 3.0 * w));
    CHECK(StateFunction::put(1.0, 1.0, 0.5, 0.0, 0)(tree, up) == doctest::Approx(std::max(1.0 - std::exp(0.5 * w), 0.0)));
    CHECK(StateFunction::call(1.0, 1.0, 0.5, 0.0, 0)(tree, up) == doctest::Approx(std::exp(0.5 * w) - 1.0));
    CHECK(StateFunction::table({0.0, 7.0, 9.0})(tree, up) == 7.0);
    const auto c = StateFunction::constant(-2.0);
    CHECK(StateFunction::max({c, StateFunction::constant(1.0)})(tree, up) == 1.0);
    CHECK(StateFunction::min({c, StateFunction::constant(1.0)})(tree, up) == -2.0);
    CHECK(StateFunction::sum({c, StateFunction::constant(1.0)})(tree, up) == -1.0);
    CHECK(StateFunction::scaled(3.0, c)(tree, up) == -6.0);
    CHECK(StateFunction::abs(c)(tree, up) == 2.0);
}

TEST_CASE("f = -y, g = -y with alpha = 0, beta = -1, kappa = 1 passes every check") {
    const auto tree = tree_with_a(2, 1);
    auto data = zero_problem(tree);
    data.driver.a = -1.0;
    data.driver.b = {0.0};
    data.driver.g_slope = -1.0;
    const auto rep = check_assumptions(data, tree, 500, 1);
    for (const auto& c : rep.checks) {
        INFO(c.id);
        CHECK(c.passed);
        CHECK_FALSE(c.witness.has_value());
    }
}

TEST_CASE("g = +y declared with beta = -1 fails the g monotonicity check at y = 1, y' = 0") {
    const auto tree = tree_with_a(2, 1);
    auto data = zero_problem(tree);
    data.driver.g_slope = 1.0;
    const auto rep = check_assumptions(data, tree, 100, 1);
    const auto& c = rep.get("H2.iv");
    CHECK_FALSE(c.passed);
    REQUIRE(c.witness.has_value());
    CHECK(c.witness->y == 1.0);
    CHECK(c.witness->y2 == 0.0);
    CHECK(c.max_violation > 0.0);
    CHECK_FALSE(rep.all_passed());
}

TEST_CASE("a terminal value below the lower barrier fails H3 naming the node") {
    const auto tree = build_tree(tree_config(2, 1.0, 1));
    auto data = zero_problem(tree);
    Barrier bar;
    bar.level = NodeValues(tree.size(), -1.0);
    const std::size_t bad = tree.layer_begin(2) + 2;
    bar.level[bad] = 0.5;
    data.barrier = bar;
    const auto rep = check_assumptions(data, tree, 10, 1);
    const auto& c = rep.get("H3");
    CHECK_FALSE(c.passed);
    REQUIRE(c.witness.has_value());
    CHECK(c.witness->node == bad);
    CHECK(c.max_violation == doctest::Approx(0.5));
}

TEST_CASE("an upper barrier below xi fails its terminal check") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    auto data = zero_problem(tree);
    Barrier bar;
    bar.side = Side::upper;
    bar.level = NodeValues(tree.size(), -0.25);
    data.barrier = bar;
    const auto rep = check_assumptions(data, tree, 10, 1);
    CHECK_FALSE(rep.get("H3''").passed);
}

TEST_CASE("declared constants of generated drivers are tight or conservative") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 30; ++i) {
        const auto tree = build_tree(random_tree_config(rng));
        RandomProblemOptions opts;
        opts.allow_cubic = true;
        const auto data = random_problem(tree, rng, opts);
        const auto rep = check_assumptions(data, tree, 300, static_cast<std::uint64_t>(i));
        for (const char* id : {"H2.constants", "H2.ii", "H2.iii", "H2.iv", "H2.v", "H1", "step-size", "H3"}) {
            INFO(id);
            CHECK(rep.get(id).passed);
            CHECK(rep.get(id).max_violation <= 1e-10);
        }
        if (data.driver.form == DriverForm::linear) {
            CHECK(rep.get("H2.vi").passed);
        }
    }
}

TEST_CASE("assumption reports are deterministic for a seed") {
    const auto tree = tree_with_a(2, 2, {{"e1", 1.0, 0.5}});
    auto data = zero_problem(tree);
    data.driver.form = DriverForm::cubic;
    data.driver.cubic = 1.0;
    data.driver.b = {0.3, 0.2};
    data.driver.c = {0.5};
    const auto a = check_assumptions(data, tree, 200, 42);
    const auto b = check_assumptions(data, tree, 200, 42);
    REQUIRE(a.checks.size() == b.checks.size());
    for (std::size_t i = 0; i < a.checks.size(); ++i) {
        CHECK(a.checks[i].passed == b.checks[i].passed);
        CHECK(a.checks[i].max_violation == b.checks[i].max_violation);
    }
    // The cubic term breaks linear growth on the default box.
    CHECK_FALSE(a.get("H2.vi").passed);
    CHECK(a.get("H2.vi").witness.has_value());
}

TEST_CASE("zero samples are refused") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    CHECK(error_of([&] { check_assumptions(zero_problem(tree), tree, 0, 1); }) == ErrorCode::precondition_violated);
}
