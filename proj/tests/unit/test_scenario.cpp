#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

using namespace grbsde;
using support::error_of;
using support::tree_config;

TEST_CASE("one Brownian step gives two equally likely leaves with dB = +-1") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    REQUIRE(tree.layer_size(1) == 2);
    const auto& law = tree.law(0);
    REQUIRE(law.size() == 2);
    CHECK(law[0].prob == 0.5);
    CHECK(law[1].prob == 0.5);
    CHECK(law[0].dB[0] == 1.0);
    CHECK(law[1].dB[0] == -1.0);
}

TEST_CASE("one mark with q dt = 0.5 gives compensated increments +-0.5") {
    const auto tree = build_tree(tree_config(1, 1.0, 0, {{"e1", 1.0, 0.5}}));
    REQUIRE(tree.layer_size(1) == 2);
    std::vector<double> dn;
    for (const auto& b : tree.law(0)) {
        CHECK(b.prob == doctest::Approx(0.5).epsilon(1e-15));
        dn.push_back(b.dN[0]);
    }
    std::sort(dn.begin(), dn.end());
    CHECK(dn[0] == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(dn[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("Brownian, mark and extra factor combine into an eight-leaf product") {
    const auto tree = build_tree(tree_config(1, 1.0, 1, {{"e1", 1.0, 0.25}}, true));
    REQUIRE(tree.layer_size(1) == 8);
    std::multiset<double> probs;
    for (std::size_t u = tree.layer_begin(1); u < tree.layer_end(1); ++u) probs.insert(tree.node(u).prob);
    // 0.5 (dB) * {0.25, 0.75} (mark) * 0.5 (extra)
    CHECK(probs.count(0.5 * 0.25 * 0.5) == 4);
    CHECK(probs.count(0.5 * 0.75 * 0.5) == 4);
}

TEST_CASE("build_tree rejects intensities with q dt >= 1 and empty grids") {
    CHECK(error_of([] { build_tree(tree_config(1, 1.0, 0, {{"e1", 1.0, 1.5}})); }) == ErrorCode::invalid_intensity);
    CHECK(error_of([] { build_tree(tree_config(1, 1.0, 0, {{"e1", 1.0, 1.0}})); }) == ErrorCode::invalid_intensity);
    CHECK(error_of([] { build_tree(TreeConfig{}); }) == ErrorCode::empty_grid);
    CHECK(error_of([] { TimeGrid::uniform(0, 1.0); }) == ErrorCode::empty_grid);
    CHECK(error_of([] { TimeGrid({0.0, 0.5, 0.5}); }) == ErrorCode::invalid_grid);
}

TEST_CASE("oversized trees are refused before allocation") {
    auto cfg = tree_config(12, 1.0, 2, {{"e1", 1.0, 0.5}});
    cfg.max_nodes = 10'000;
    CHECK(error_of([&] { build_tree(cfg); }) == ErrorCode::tree_too_large);
}

TEST_CASE("conditional expectation of two children is their mean") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    NodeValues x(tree.size());
    x[tree.layer_begin(1)] = 4.0;
    x[tree.layer_begin(1) + 1] = 6.0;
    CHECK(conditional_expectation(tree, x, 0)[0] == 5.0);
}

TEST_CASE("conditional expectation of a constant is the constant") {
    const auto tree = build_tree(tree_config(3, 1.0, 1, {{"e1", 1.0, 0.7}}, true));
    const NodeValues x(tree.size(), 3.25);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto e = conditional_expectation(tree, x, k);
        for (std::size_t u = tree.layer_begin(k); u < tree.layer_end(k); ++u) {
            CHECK(e[u] == doctest::Approx(3.25).epsilon(1e-15));
        }
    }
}

TEST_CASE("four equally likely children average to 2.5") {
    const auto tree = build_tree(tree_config(1, 1.0, 2));
    REQUIRE(tree.layer_size(1) == 4);
    NodeValues x(tree.size());
    for (std::size_t i = 0; i < 4; ++i) x[tree.layer_begin(1) + i] = static_cast<double>(i + 1);
    CHECK(conditional_expectation(tree, x, 0)[0] == 2.5);
}

TEST_CASE("a missing child value is an incomplete process") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    NodeValues x(tree.size());
    x[tree.layer_begin(1)] = 1.0;
    CHECK(error_of([&] { conditional_expectation(tree, x, 0); }) == ErrorCode::incomplete_process);
}

TEST_CASE("decomposing dB returns z = 1 and no residual") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    std::vector<double> mu;
    for (const auto& b : tree.law(0)) mu.push_back(b.dB[0]);
    const auto dec = martingale_decompose(tree, 0, mu);
    CHECK(dec.z[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(dec.v.empty());
    for (double r : dec.residual) CHECK(std::abs(r) <= 1e-15);
}

TEST_CASE("dB + 2 dm splits into z = 1 and residual 2 dm") {
    const auto tree = build_tree(tree_config(1, 1.0, 1, {}, true));
    std::vector<double> mu;
    const auto& law = tree.law(0);
    for (const auto& b : law) mu.push_back(b.dB[0] + 2.0 * b.dm);
    const auto dec = martingale_decompose(tree, 0, mu);
    CHECK(dec.z[0] == doctest::Approx(1.0).epsilon(1e-15));
    for (std::size_t i = 0; i < law.size(); ++i) CHECK(std::abs(dec.residual[i] - 2.0 * law[i].dm) <= 1e-15);
}

TEST_CASE("3 dN gives v = 3, z = 0 and no residual") {
    const auto tree = build_tree(tree_config(1, 1.0, 1, {{"e1", 1.0, 0.3}}));
    std::vector<double> mu;
    for (const auto& b : tree.law(0)) mu.push_back(3.0 * b.dN[0]);
    const auto dec = martingale_decompose(tree, 0, mu);
    CHECK(dec.v[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(std::abs(dec.z[0]) <= 1e-15);
    for (double r : dec.residual) CHECK(std::abs(r) <= 1e-14);
}

TEST_CASE("a non-centered vector is not a martingale increment") {
    const auto tree = build_tree(tree_config(1, 1.0, 1));
    const std::vector<double> mu{1.0, 0.5};
    CHECK(error_of([&] { martingale_decompose(tree, 0, mu); }) == ErrorCode::not_a_martingale_increment);
}

TEST_CASE("branch laws have exact moments on nonuniform grids") {
    TreeConfig cfg;
    cfg.grid = TimeGrid({0.0, 0.1, 0.35, 1.0});
    cfg.brownian_dims = 2;
    cfg.marks = {{"e1", 1.0, 0.9}, {"e2", 2.0, 0.4}};
    cfg.extra_factor = true;
    cfg.a_schedule.increments = {0.1, 0.0, 0.4};
    const auto tree = build_tree(cfg);
    for (std::size_t k = 0; k < tree.steps(); ++k) {
        const double dt = tree.grid().step(k);
        const auto& law = tree.law(k);
        double total = 0.0, mean_m = 0.0;
        std::vector<double> mean_b(2, 0.0), mean_n(2, 0.0);
        double bb[2][2] = {{0, 0}, {0, 0}};
        double bn[2][2] = {{0, 0}, {0, 0}};
        double bm = 0.0, nm = 0.0;
        for (const auto& b : law) {
            total += b.prob;
            mean_m += b.prob * b.dm;
            for (int i = 0; i < 2; ++i) {
                mean_b[i] += b.prob * b.dB[i];
                mean_n[i] += b.prob * b.dN[i];
                for (int j = 0; j < 2; ++j) bb[i][j] += b.prob * b.dB[i] * b.dB[j];
                for (int j = 0; j < 2; ++j) bn[i][j] += b.prob * b.dB[i] * b.dN[j];
            }
            bm += b.prob * b.dB[0] * b.dm;
            nm += b.prob * b.dN[1] * b.dm;
        }
        CHECK(std::abs(total - 1.0) <= 1e-15);
        CHECK(std::abs(mean_m) <= 1e-15);
        for (int i = 0; i < 2; ++i) {
            CHECK(std::abs(mean_b[i]) <= 1e-14);
            CHECK(std::abs(mean_n[i]) <= 1e-14);
            CHECK(std::abs(bb[i][i] - dt) <= 1e-14);
        }
        CHECK(std::abs(bb[0][1]) <= 1e-14);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) CHECK(std::abs(bn[i][j]) <= 1e-14);
        }
        CHECK(std::abs(bm) <= 1e-14);
        CHECK(std::abs(nm) <= 1e-14);
    }
}

TEST_CASE("layer probabilities sum to one and A is nondecreasing along paths") {
    auto cfg = tree_config(3, 1.0, 1, {{"e1", 1.0, 0.8}}, true);
    cfg.a_schedule.kind = ASchedule::Kind::mark_driven;
    cfg.a_schedule.increments.clear();
    cfg.a_schedule.rate = 0.5;
    cfg.a_schedule.jump_weights = {0.7};
    const auto tree = build_tree(cfg);
    CHECK(tree.node(0).a == 0.0);
    for (std::size_t k = 0; k <= tree.steps(); ++k) {
        double total = 0.0;
        for (std::size_t u = tree.layer_begin(k); u < tree.layer_end(k); ++u) {
            total += tree.node(u).prob;
            const auto& n = tree.node(u);
            if (n.parent != npos) {
                CHECK(n.a == doctest::Approx(tree.node(n.parent).a + tree.node(n.parent).da).epsilon(1e-15));
                CHECK(n.a >= tree.node(n.parent).a);
            }
            CHECK(n.da >= 0.0);
        }
        CHECK(std::abs(total - 1.0) <= 1e-14);
    }
}

TEST_CASE("decomposition reconstructs random centered vectors with orthogonal residuals") {
    const auto tree = build_tree(tree_config(2, 1.0, 2, {{"e1", 1.0, 0.6}}, true));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    for (std::size_t u = 0; u < tree.layer_begin(2); ++u) {
        const auto& law = tree.law(tree.node(u).layer);
        std::vector<double> mu(law.size());
        double mean = 0.0;
        for (std::size_t i = 0; i < law.size(); ++i) {
            mu[i] = U(rng);
            mean += law[i].prob * mu[i];
        }
        for (auto& x : mu) x -= mean;
        const auto dec = martingale_decompose(tree, u, mu);
        double e_r = 0.0, e_rb0 = 0.0, e_rb1 = 0.0, e_rn = 0.0;
        for (std::size_t i = 0; i < law.size(); ++i) {
            const double recon = dec.z[0] * law[i].dB[0] + dec.z[1] * law[i].dB[1] + dec.v[0] * law[i].dN[0] +
                                 dec.residual[i];
            CHECK(std::abs(recon - mu[i]) <= 1e-12);
            e_r += law[i].prob * dec.residual[i];
            e_rb0 += law[i].prob * dec.residual[i] * law[i].dB[0];
            e_rb1 += law[i].prob * dec.residual[i] * law[i].dB[1];
            e_rn += law[i].prob * dec.residual[i] * law[i].dN[0];
        }
        CHECK(std::abs(e_r) <= 1e-12);
        CHECK(std::abs(e_rb0) <= 1e-12);
        CHECK(std::abs(e_rb1) <= 1e-12);
        CHECK(std::abs(e_rn) <= 1e-12);
    }
}

TEST_CASE("without the extra factor every centered vector in the span has zero residual") {
    const auto tree = build_tree(tree_config(1, 1.0, 2, {{"e1", 1.0, 0.6}}));
    const auto& law = tree.law(0);
    std::vector<double> mu;
    for (const auto& b : law) mu.push_back(0.7 * b.dB[0] - 1.3 * b.dB[1] + 2.2 * b.dN[0]);
    const auto dec = martingale_decompose(tree, 0, mu);
    for (double r : dec.residual) CHECK(std::abs(r) <= 1e-12);
}
