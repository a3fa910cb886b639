#include "grbsde/analysis.hpp"

#include "grbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

namespace grbsde {

double default_gamma(const Driver& driver) {
    return 1.0 + 2.0 * std::abs(driver.alpha) + 4.0 * driver.kappa * driver.kappa;
}

bool EstimateReport::inequalities_hold() const {
    return std::all_of(inequalities.begin(), inequalities.end(), [](const PrefixInequality& r) {
        return !r.applicable || r.holds();
    });
}

namespace {

constexpr double growth_slack = 1e-12;

// Signed rhs - lhs with a relative round-off allowance folded in.
double margin(double lhs, double rhs) {
    return rhs - lhs + 1e-12 * std::max(1.0, std::abs(rhs));
}

}  // namespace

EstimateReport apriori_check(const ScenarioTree& tree, const ProblemData& data, const GBSDESolution& sol,
                             const NodeValues* K, const WeightedNormConfig& cfg) {
    const std::size_t steps = tree.steps();
    const double mu = cfg.mu;
    const double gamma = cfg.gamma;
    const Driver& drv = data.driver;
    EstimateReport rep;

    rep.y_da = weighted_norm(tree, sol.y, Space::M2mu_dA, cfg);
    rep.zv_dt = weighted_norm(tree, sol.z, Space::M2mu_dt, cfg, VectorMetric::euclidean) +
                weighted_norm(tree, sol.v, Space::M2mu_dt, cfg, VectorMetric::q_weighted);
    NodeValues dm = sol.dm;
    if (dm.size() > 0) {
        dm[0] = 0.0;
    }
    rep.m_qv = weighted_norm(tree, dm, Space::M2mart, cfg);
    if (K != nullptr) {
        rep.k_t = weighted_norm(tree, *K, Space::K, cfg);
    }

    // Path-wise running quantities, carried from parent to child.
    std::vector<double> sup_y(tree.size()), sup_l(tree.size());
    std::vector<double> sum_g(tree.size()), sum_f(tree.size());
    std::vector<double> rhs_g(tree.size()), rhs_f(tree.size()), rhs_e(tree.size());
    bool growth_g = true;
    bool growth_f = true;
    bool psi_ge_one = true;

    PrefixInequality ineq_g{"growth_g_dA", true, 0.0, 0.0, 0.0,
                            "(sum g dA)^2 <= (2/mu) E[sum e^{mu A}(psi^2 + kappa^2 Y^2) dA]"};
    PrefixInequality ineq_f{"growth_f_dt", true, 0.0, 0.0, 0.0,
                            "(sum f(Y,0,0) dt)^2 <= (2/gamma) E[sum e^{gamma t}(phi^2 + kappa^2 Y^2) dt]"};
    PrefixInequality ineq_e{"exp_mu_A", true, 0.0, 0.0, 0.0, "E[e^{mu A_T}] <= 1 + mu E[sum e^{mu A} psi^2 dA]"};
    double worst_g = std::numeric_limits<double>::infinity();
    double worst_f = worst_g;
    double worst_e = worst_g;
    const std::vector<double> no_z(tree.brownian_dims(), 0.0);
    const std::vector<double> no_v(tree.mark_count(), 0.0);

    const Barrier* bar = data.barrier ? &*data.barrier : nullptr;
    for (std::size_t k = 0; k <= steps; ++k) {
        double lhs_g = 0.0, lhs_f = 0.0, lhs_e = 0.0, r_g = 0.0, r_f = 0.0, r_e = 0.0;
        for (std::size_t u = tree.layer_begin(k); u < tree.layer_end(k); ++u) {
            const auto& n = tree.node(u);
            const double ea = std::exp(mu * n.a);
            const double y2 = ea * sol.y[u] * sol.y[u];
            double lplus = 0.0;
            if (bar != nullptr) {
                const double l = bar->level[u];
                lplus = bar->side == Side::lower ? std::max(l, 0.0) : std::max(-l, 0.0);
            }
            const double l2 = ea * ea * lplus * lplus;
            if (n.parent == npos) {
                sup_y[u] = y2;
                sup_l[u] = l2;
                sum_g[u] = sum_f[u] = rhs_g[u] = rhs_f[u] = rhs_e[u] = 0.0;
            } else {
                const std::size_t p = n.parent;
                const auto& pn = tree.node(p);
                const double dt = tree.grid().step(pn.layer);
                const double yp = sol.y[p];
                const double g = evaluate_g(tree, data, p, yp);
                const double f = evaluate_f(tree, data, p, yp, no_z, no_v);
                const double phi = phi_at(data, p);
                const double psi = psi_at(data, p);
                const double ka2 = drv.kappa * drv.kappa;
                const double wa = step_weight(tree, p, 0.0, mu);
                const double wt = step_weight(tree, p, gamma, 0.0);
                sup_y[u] = std::max(sup_y[p], y2);
                sup_l[u] = std::max(sup_l[p], l2);
                sum_g[u] = sum_g[p] + g * pn.da;
                sum_f[u] = sum_f[p] + f * dt;
                rhs_g[u] = rhs_g[p] + wa * (psi * psi + ka2 * yp * yp) * pn.da;
                rhs_f[u] = rhs_f[p] + wt * (phi * phi + ka2 * yp * yp) * dt;
                rhs_e[u] = rhs_e[p] + wa * psi * psi * pn.da;
                // Children are visited once per edge; check the parent's bounds once.
                if (n.branch == 0) {
                    const double bound = (psi + drv.kappa * std::abs(yp)) * (1.0 + growth_slack);
                    growth_g = growth_g && std::abs(g) <= bound;
                    growth_f = growth_f && std::abs(f) <= (phi + drv.kappa * std::abs(yp)) * (1.0 + growth_slack);
                    psi_ge_one = psi_ge_one && psi >= 1.0;
                    rep.phi_term += pn.prob * wa * phi * phi * dt;
                    rep.psi_term += pn.prob * wa * psi * psi * pn.da;
                }
            }
            lhs_g += n.prob * sum_g[u] * sum_g[u];
            lhs_f += n.prob * sum_f[u] * sum_f[u];
            lhs_e += n.prob * ea;
            r_g += n.prob * rhs_g[u];
            r_f += n.prob * rhs_f[u];
            r_e += n.prob * rhs_e[u];
            if (k == steps) {
                rep.sup_y += n.prob * sup_y[u];
                rep.barrier_term += n.prob * sup_l[u];
                rep.xi_term += n.prob * ea * data.xi[u] * data.xi[u];
            }
        }
        r_g *= 2.0 / mu;
        r_f *= 2.0 / gamma;
        r_e = 1.0 + mu * r_e;
        worst_g = std::min(worst_g, margin(lhs_g, r_g));
        worst_f = std::min(worst_f, margin(lhs_f, r_f));
        worst_e = std::min(worst_e, margin(lhs_e, r_e));
        if (k == steps) {
            ineq_g.lhs_total = lhs_g;
            ineq_g.rhs_total = r_g;
            ineq_f.lhs_total = lhs_f;
            ineq_f.rhs_total = r_f;
            ineq_e.lhs_total = lhs_e;
            ineq_e.rhs_total = r_e;
        }
    }
    ineq_g.worst_margin = worst_g;
    ineq_f.worst_margin = worst_f;
    ineq_e.worst_margin = worst_e;
    ineq_g.applicable = growth_g && mu > 0.0;
    ineq_f.applicable = growth_f && gamma > 0.0;
    ineq_e.applicable = psi_ge_one && mu > 0.0;
    rep.inequalities = {ineq_g, ineq_f, ineq_e};

    const double lhs = rep.lhs();
    const double rhs = rep.rhs();
    if (rhs > 0.0) {
        rep.ratio = lhs / rhs;
    } else {
        rep.ratio = lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    return rep;
}

ContractionReport contraction_rate(const ScenarioTree& tree, const PicardResult& picard,
                                   const WeightedNormConfig& cfg) {
    const auto& h = picard.history;
    if (h.size() < 3) {
        throw Error(ErrorCode::insufficient_history,
                    "need at least 3 iterates, got " + std::to_string(h.size()));
    }
    PicardIterate zero{NodeValues(tree.size(), 0.0), zero_vectors(tree, tree.brownian_dims()),
                       zero_vectors(tree, tree.mark_count()), NodeValues(tree.size(), 0.0)};
    const double scale = iterate_distance(tree, h.back(), zero, cfg);
    const double floor = 1e-26 * std::max(1.0, scale);
    std::vector<double> d;
    for (std::size_t i = 0; i + 1 < h.size(); ++i) {
        const double x = iterate_distance(tree, h[i + 1], h[i], cfg);
        d.push_back(x <= floor ? 0.0 : x);
    }
    ContractionReport rep;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        const double r = d[i] == 0.0 ? 0.0 : d[i + 1] / d[i];
        rep.ratios.push_back(r);
        rep.max_ratio = std::max(rep.max_ratio, r);
    }
    rep.below_one = rep.max_ratio < 1.0;
    rep.within_half = rep.max_ratio <= 0.5;
    return rep;
}

namespace {

[[noreturn]] void violated(const std::string& what, std::size_t node, double lhs, double rhs) {
    std::ostringstream os;
    os.precision(17);
    os << what << " fails at node " << node << " (" << lhs << " > " << rhs << ")";
    throw Error(ErrorCode::precondition_violated, os.str());
}

double level_or(const ProblemData& d, std::size_t u, double fallback) {
    return d.barrier ? d.barrier->level[u] : fallback;
}

struct Solved {
    GBSDESolution sol;
    NodeValues dk;
};

Solved solve_for_comparison(const ScenarioTree& tree, const ProblemData& d) {
    if (!d.barrier) {
        Solved s{solve_gbsde(tree, d), NodeValues(tree.size(), 0.0)};
        return s;
    }
    ReflectedSolution r = solve_reflected_direct(tree, d, d.barrier->side);
    return {std::move(r.base), std::move(r.dK)};
}

}  // namespace

ComparisonReport compare_solutions(const ScenarioTree& tree, const ProblemData& data, const ProblemData& data2,
                                   double tol) {
    const double inf = std::numeric_limits<double>::infinity();
    std::optional<Side> side;
    if (data.barrier) side = data.barrier->side;
    if (data2.barrier) {
        if (side && *side != data2.barrier->side) {
            throw Error(ErrorCode::precondition_violated, "the two problems reflect on different sides");
        }
        side = data2.barrier->side;
    }
    const std::size_t K = tree.steps();
    for (std::size_t u = tree.layer_begin(K); u < tree.size(); ++u) {
        if (data.xi[u] > data2.xi[u]) violated("xi <= xi'", u, data.xi[u], data2.xi[u]);
    }
    if (side) {
        for (std::size_t u = 0; u < tree.size(); ++u) {
            // A missing lower barrier is -inf, a missing upper barrier +inf.
            const double fill = *side == Side::lower ? -inf : inf;
            const double l1 = level_or(data, u, fill);
            const double l2 = level_or(data2, u, fill);
            if (l1 > l2) violated("barrier ordering L <= L'", u, l1, l2);
        }
    }

    Solved s1 = solve_for_comparison(tree, data);
    Solved s2 = solve_for_comparison(tree, data2);

    const std::size_t interior = tree.layer_begin(K);
    for (std::size_t u = 0; u < interior; ++u) {
        const double y2 = s2.sol.y[u];
        const double f1 = evaluate_f(tree, data, u, y2, s2.sol.z[u], s2.sol.v[u]);
        const double f2 = evaluate_f(tree, data2, u, y2, s2.sol.z[u], s2.sol.v[u]);
        if (f1 > f2 + 1e-12 * std::max(1.0, std::abs(f2))) violated("f <= f' along the second solution", u, f1, f2);
        const double g1 = evaluate_g(tree, data, u, y2);
        const double g2 = evaluate_g(tree, data2, u, y2);
        if (g1 > g2 + 1e-12 * std::max(1.0, std::abs(g2))) violated("g <= g' along the second solution", u, g1, g2);
    }

    ComparisonReport rep;
    rep.min_gap = inf;
    for (std::size_t u = 0; u < tree.size(); ++u) {
        const double diff = s1.sol.y[u] - s2.sol.y[u];
        rep.max_y_violation = std::max(rep.max_y_violation, diff);
        rep.min_gap = std::min(rep.min_gap, -diff);
        if (diff > tol) ++rep.y_violations;
    }

    const bool free1 = !data.driver.depends_on_z() && !data.driver.depends_on_v();
    const bool free2 = !data2.driver.depends_on_z() && !data2.driver.depends_on_v();
    bool same_barrier = data.barrier && data2.barrier;
    if (same_barrier) {
        for (std::size_t u = 0; u < tree.size() && same_barrier; ++u) {
            same_barrier = data.barrier->level[u] == data2.barrier->level[u];
        }
    }
    if (free1 && free2 && same_barrier) {
        rep.k_checked = true;
        const double orient = *side == Side::lower ? 1.0 : -1.0;
        for (std::size_t u = 0; u < interior; ++u) {
            const double diff = orient * (s2.dk[u] - s1.dk[u]);
            rep.max_k_violation = std::max(rep.max_k_violation, diff);
            if (diff > tol) ++rep.k_violations;
        }
    }
    rep.y = std::move(s1.sol.y);
    rep.y2 = std::move(s2.sol.y);
    return rep;
}

GammaConditionReport check_gamma_condition(const ScenarioTree& tree, const ProblemData& data,
                                           const std::vector<double>& nu, std::size_t samples, std::uint64_t seed,
                                           const SamplingBox& box) {
    const std::size_t m = tree.mark_count();
    const std::size_t d = tree.brownian_dims();
    if (nu.size() != m) {
        throw Error(ErrorCode::mark_dimension_error,
                    "nu has " + std::to_string(nu.size()) + " entries for " + std::to_string(m) + " marks");
    }
    for (double x : nu) {
        if (!(x >= 0.0)) {
            throw Error(ErrorCode::precondition_violated, "nu must be nonnegative");
        }
    }
    GammaConditionReport rep;
    if (!data.driver.depends_on_v() || m == 0) {
        return rep;
    }
    const std::size_t interior = tree.layer_begin(tree.steps());
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, interior - 1);

    auto probe = [&](std::size_t u, double y, const std::vector<double>& z, const std::vector<double>& v,
                     const std::vector<double>& v2) {
        const double diff = evaluate_f(tree, data, u, y, z, v) - evaluate_f(tree, data, u, y, z, v2);
        double bound = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double dv = v[j] - v2[j];
            const double coef = dv >= 0.0 ? nu[j] : std::max(-1.0, -nu[j]);
            bound += coef * dv * tree.mark_weight(j);
        }
        const double excess = diff - bound - 1e-10 * std::max(1.0, std::abs(diff));
        if (excess > 0.0) {
            if (!rep.witness) {
                rep.witness = Witness{u, tree.node(u).layer, y, y, z, z, v, v2, excess};
            }
            rep.passed = false;
            rep.max_violation = std::max(rep.max_violation, excess);
        }
    };

    const std::vector<double> zero_z(d, 0.0);
    const std::vector<double> zero_v(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        for (double s : {1.0, -1.0}) {
            std::vector<double> v(m, 0.0);
            v[j] = s;
            probe(0, 0.0, zero_z, v, zero_v);
        }
    }
    for (std::size_t i = 0; i < samples; ++i) {
        const std::size_t u = pick(rng);
        const double y = box.y * unit(rng);
        std::vector<double> z(d), v(m), v2(m);
        for (auto& x : z) x = box.z * unit(rng);
        for (auto& x : v) x = box.v * unit(rng);
        for (auto& x : v2) x = box.v * unit(rng);
        probe(u, y, z, v, v2);
    }
    return rep;
}

}  // namespace grbsde
