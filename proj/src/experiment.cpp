#include "grbsde/experiment.hpp"

#include "grbsde/analysis.hpp"
#include "grbsde/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

namespace grbsde {

namespace fs = std::filesystem;

std::string subcommand_name(Subcommand s) {
    switch (s) {
        case Subcommand::solve: return "solve";
        case Subcommand::penalize: return "penalize";
        case Subcommand::reflect: return "reflect";
        case Subcommand::stop: return "stop";
        case Subcommand::compare: return "compare";
        case Subcommand::check: return "check";
    }
    return "?";
}

Subcommand parse_subcommand(const std::string& s) {
    for (auto c : {Subcommand::solve, Subcommand::penalize, Subcommand::reflect, Subcommand::stop,
                   Subcommand::compare, Subcommand::check}) {
        if (subcommand_name(c) == s) return c;
    }
    throw Error(ErrorCode::config_error, "unknown subcommand '" + s + "'");
}

bool ExperimentResult::passed() const {
    for (const auto& l : lines) {
        if (l.asserted && !l.passed) return false;
    }
    return true;
}

std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) return "0";  // no "-0"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

class Csv {
public:
    Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
        if (!out_) {
            throw Error(ErrorCode::io_error, "cannot write '" + path.string() + "'");
        }
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

std::string R(double x) { return format_real(x); }
std::string I(std::size_t x) { return std::to_string(x); }

class Run {
public:
    Run(const ExperimentConfig& cfg, const fs::path& dir, std::uint64_t seed)
        : cfg(cfg), dir(dir), seed(seed), tree(build_tree(cfg.tree)), data(cfg.problem.instantiate(tree)) {}

    const ExperimentConfig& cfg;
    fs::path dir;
    std::uint64_t seed;
    ScenarioTree tree;
    ProblemData data;
    ExperimentResult result;

    Csv csv(const std::string& name, const std::vector<std::string>& header) {
        result.files.push_back(name);
        return Csv(dir / name, header);
    }

    void check(const std::string& name, bool ok, double value) { result.lines.push_back({name, true, ok, value}); }
    void info(const std::string& name, double value) { result.lines.push_back({name, false, true, value}); }

    // value <= bound, reporting the value
    void at_most(const std::string& name, double value, double bound) { check(name, value <= bound, value); }

    const Barrier& barrier() const {
        if (!data.barrier) {
            throw Error(ErrorCode::missing_barrier, "this subcommand needs problem.barrier");
        }
        return *data.barrier;
    }

    double tol() const { return cfg.run.tol; }

    WeightedNormConfig norm_cfg() const { return {data.mu, default_gamma(data.driver)}; }
};

double max_defined(const NodeValues& x, std::size_t begin, std::size_t end) {
    double m = 0.0;
    for (std::size_t u = begin; u < end; ++u) {
        if (x.defined(u)) m = std::max(m, std::abs(x[u]));
    }
    return m;
}

double max_abs_diff(const NodeValues& a, const NodeValues& b) {
    double m = 0.0;
    for (std::size_t u = 0; u < a.size(); ++u) m = std::max(m, std::abs(a[u] - b[u]));
    return m;
}

// Largest |E[dm]|, |E[dm dB^j]|, |E[dm dN_j]| over interior nodes.
double orthogonality_defect(const ScenarioTree& tree, const NodeValues& dm) {
    double worst = 0.0;
    for (std::size_t u = 0; u < tree.layer_begin(tree.steps()); ++u) {
        const auto& node = tree.node(u);
        const auto& law = tree.law(node.layer);
        double mean = 0.0;
        std::vector<double> cb(tree.brownian_dims(), 0.0);
        std::vector<double> cn(tree.mark_count(), 0.0);
        for (std::size_t i = 0; i < law.size(); ++i) {
            const double m = dm[node.first_child + i];
            mean += law[i].prob * m;
            for (std::size_t j = 0; j < cb.size(); ++j) cb[j] += law[i].prob * m * law[i].dB[j];
            for (std::size_t j = 0; j < cn.size(); ++j) cn[j] += law[i].prob * m * law[i].dN[j];
        }
        worst = std::max(worst, std::abs(mean));
        for (double x : cb) worst = std::max(worst, std::abs(x));
        for (double x : cn) worst = std::max(worst, std::abs(x));
    }
    return worst;
}

std::vector<std::string> solution_header(const ScenarioTree& tree) {
    std::vector<std::string> h{"node", "layer", "time", "prob", "A", "dA", "Y"};
    for (std::size_t j = 0; j < tree.brownian_dims(); ++j) h.push_back("Z" + I(j));
    for (std::size_t j = 0; j < tree.mark_count(); ++j) h.push_back("V" + I(j));
    h.push_back("dM");
    h.push_back("residual");
    return h;
}

std::vector<std::string> solution_row(const ScenarioTree& tree, const GBSDESolution& sol, std::size_t u) {
    const auto& n = tree.node(u);
    std::vector<std::string> r{I(u), I(n.layer), R(tree.time_of(u)), R(n.prob), R(n.a), R(n.da), R(sol.y[u])};
    const bool leaf = tree.is_leaf(u);
    for (std::size_t j = 0; j < tree.brownian_dims(); ++j) r.push_back(leaf ? "" : R(sol.z[u][j]));
    for (std::size_t j = 0; j < tree.mark_count(); ++j) r.push_back(leaf ? "" : R(sol.v[u][j]));
    r.push_back(u == 0 ? "" : R(sol.dm[u]));
    r.push_back(leaf ? "" : R(sol.residual[u]));
    return r;
}

void write_estimates(Csv& csv, const std::string& label, const EstimateReport& e) {
    csv.row({label, R(e.sup_y), R(e.y_da), R(e.zv_dt), R(e.m_qv), R(e.k_t), R(e.xi_term), R(e.phi_term),
             R(e.psi_term), R(e.barrier_term), R(e.lhs()), R(e.rhs()), R(e.ratio)});
}

const std::vector<std::string> estimate_header{"label",   "sup_y",    "y_da",     "zv_dt",        "m_qv",
                                               "k_t",     "xi_term",  "phi_term", "psi_term",     "barrier_term",
                                               "lhs",     "rhs",      "ratio"};

void record_inequalities(Run& run, const std::string& prefix, const EstimateReport& e) {
    for (const auto& r : e.inequalities) {
        if (r.applicable) {
            run.check(prefix + "." + r.name, r.holds(), r.worst_margin);
        } else {
            run.info(prefix + "." + r.name + ".not_applicable", r.worst_margin);
        }
    }
}

void picard_checks(Run& run, const std::string& prefix, std::optional<Side> reflect, const NodeValues& direct_y) {
    const auto norm = run.norm_cfg();
    const auto z0 = zero_vectors(run.tree, run.tree.brownian_dims());
    const auto v0 = zero_vectors(run.tree, run.tree.mark_count());
    const PicardResult pic = picard_solve(run.tree, run.data, z0, v0, run.cfg.run.picard_max_iters,
                                          run.cfg.run.picard_tol, norm, reflect);
    const ContractionReport cr = contraction_rate(run.tree, pic, norm);
    auto csv = run.csv(prefix + "_picard.csv", {"iteration", "diff_norm", "ratio"});
    for (std::size_t i = 0; i < pic.diff_norms.size(); ++i) {
        csv.row({I(i + 1), R(pic.diff_norms[i]), i < cr.ratios.size() ? R(cr.ratios[i]) : ""});
    }
    run.check(prefix + ".picard_converged", pic.converged, static_cast<double>(pic.iterations));
    run.at_most(prefix + ".picard_vs_direct", max_abs_diff(pic.solution.y, direct_y), 1e-10);
    run.check(prefix + ".contraction_ratio_below_one", cr.below_one, cr.max_ratio);
    run.info(prefix + ".contraction_ratio_within_half", cr.within_half ? 1.0 : 0.0);
}

void run_solve(Run& run) {
    const GBSDESolution sol = solve_gbsde(run.tree, run.data);
    {
        auto csv = run.csv("solution.csv", solution_header(run.tree));
        for (std::size_t u = 0; u < run.tree.size(); ++u) csv.row(solution_row(run.tree, sol, u));
    }
    const std::size_t interior = run.tree.layer_begin(run.tree.steps());
    run.at_most("solve.backward_residual", max_defined(sol.residual, 0, interior), 1e-12);
    run.at_most("solve.martingale_orthogonality", orthogonality_defect(run.tree, sol.dm), 1e-12);
    // M vanishes only when (1, dB, dN) spans every one-step law; product trees with d + m >= 2
    // have cross terms that land in M even without the extra factor.
    const double m_max = max_defined(sol.dm, 1, run.tree.size());
    if (run.tree.branching() == 1 + run.tree.brownian_dims() + run.tree.mark_count()) {
        run.at_most("solve.orthogonal_martingale_zero", m_max, 1e-12);
    } else {
        run.info("solve.orthogonal_martingale_max", m_max);
    }
    picard_checks(run, "solve", std::nullopt, sol.y);

    const EstimateReport est = apriori_check(run.tree, run.data, sol, nullptr, {run.data.mu, 1.0});
    {
        auto csv = run.csv("estimates.csv", estimate_header);
        write_estimates(csv, "gbsde", est);
    }
    run.check("solve.estimate_ratio_finite", std::isfinite(est.ratio), est.ratio);
    record_inequalities(run, "solve", est);
}

void run_penalize(Run& run) {
    run.barrier();
    const ConvergenceReport rep = penalization_sweep(run.tree, run.data, run.cfg.run.n_list, run.tol());
    {
        auto csv = run.csv("penalization.csv", ConvergenceReport::csv_header());
        for (const auto& r : rep.rows) {
            csv.row({R(r.n), R(r.sup_neg_part), R(r.sup_diff_prev), R(r.skorokhod_residual), R(r.norm_y),
                     R(r.norm_z), R(r.norm_v), R(r.norm_m), R(r.norm_k), R(r.monotonicity_violation),
                     R(r.max_diff_direct)});
        }
    }
    run.at_most("penalize.monotone_in_n", rep.max_monotonicity_violation, 1e-10);
    run.check("penalize.sup_neg_part_decreasing", rep.sup_neg_decreasing, rep.rows.back().sup_neg_part);
    run.info("penalize.max_diff_direct", rep.rows.back().max_diff_direct);
    run.info("penalize.converged_to_tol", rep.converged ? 1.0 : 0.0);

    const WeightedNormConfig ecfg{run.data.mu, 1.0};
    auto aux_csv = run.csv("auxiliary.csv", {"n", "representation_residual", "sup_neg_y", "sup_neg_ybar", "min_gap"});
    auto est_csv = run.csv("estimates.csv", estimate_header);
    double worst_repr = 0.0;
    double worst_gap = std::numeric_limits<double>::infinity();
    std::vector<double> ratios;
    bool inequalities_ok = true;
    double inequalities_margin = std::numeric_limits<double>::infinity();
    for (const auto& pen : rep.solutions) {
        const AuxiliaryDiagnostics aux = solve_auxiliary(run.tree, run.data, pen);
        aux_csv.row({R(pen.n), R(aux.representation_residual), R(aux.sup_neg_y), R(aux.sup_neg_ybar), R(aux.min_gap)});
        worst_repr = std::max(worst_repr, aux.representation_residual);
        worst_gap = std::min(worst_gap, aux.min_gap);

        const EstimateReport est = apriori_check(run.tree, run.data, pen.sol, &pen.K, ecfg);
        write_estimates(est_csv, "n=" + R(pen.n), est);
        ratios.push_back(est.ratio);
        for (const auto& r : est.inequalities) {
            if (!r.applicable) continue;
            inequalities_ok = inequalities_ok && r.holds();
            inequalities_margin = std::min(inequalities_margin, r.worst_margin);
        }
    }
    run.at_most("penalize.auxiliary_representation_residual", worst_repr, 1e-10);
    run.check("penalize.penalized_dominates_auxiliary", worst_gap >= -1e-10, worst_gap);

    bool finite = true;
    for (double r : ratios) finite = finite && std::isfinite(r);
    run.check("penalize.estimate_ratios_finite", finite, *std::max_element(ratios.begin(), ratios.end()));
    if (ratios.size() >= 2) {
        const double a = ratios[ratios.size() - 2];
        const double b = ratios.back();
        const double q = (a == 0.0 && b == 0.0) ? 1.0 : b / a;
        run.check("penalize.estimate_ratio_stable", q >= 0.5 && q <= 2.0, q);
    }
    run.info("penalize.norms_stable", rep.norms_stable ? 1.0 : 0.0);
    if (std::isfinite(inequalities_margin)) {
        run.check("penalize.growth_inequalities", inequalities_ok, inequalities_margin);
    }
}

ReflectedSolution reflect_pipeline(Run& run, bool write) {
    const Barrier& bar = run.barrier();
    ReflectedSolution sol = solve_reflected_direct(run.tree, run.data, bar.side);
    apply_decomposition(run.tree, run.data, sol);
    const NodeValues snell = snell_envelope(run.tree, run.data, sol.base);
    const double orient = bar.side == Side::lower ? 1.0 : -1.0;
    const std::size_t interior = run.tree.layer_begin(run.tree.steps());

    if (write) {
        auto csv = run.csv("reflected.csv",
                           {"node", "layer", "time", "prob", "Y", "barrier", "K", "dK", "dKc", "dKd", "snell"});
        for (std::size_t u = 0; u < run.tree.size(); ++u) {
            csv.row({I(u), I(run.tree.node(u).layer), R(run.tree.time_of(u)), R(run.tree.node(u).prob),
                     R(sol.base.y[u]), R(bar.level[u]), R(sol.K[u]), R(sol.dK[u]), R(sol.dKc[u]), R(sol.dKd[u]),
                     R(snell[u])});
        }
    }

    double below = 0.0, neg_dk = 0.0, recon = 0.0;
    for (std::size_t u = 0; u < run.tree.size(); ++u) {
        below = std::max(below, orient * (bar.level[u] - sol.base.y[u]));
        neg_dk = std::max(neg_dk, -sol.dK[u]);
        recon = std::max(recon, std::abs(sol.dKc[u] + sol.dKd[u] - sol.dK[u]));
    }
    run.at_most("reflect.barrier_respected", below, 0.0);
    run.at_most("reflect.dK_nonnegative", neg_dk, 0.0);
    run.at_most("reflect.skorokhod_residual", sol.skorokhod_residual, 1e-10);
    run.at_most("reflect.K_decomposition_exact", recon, 0.0);
    run.at_most("reflect.backward_residual", max_defined(sol.base.residual, 0, interior), 1e-12);
    run.at_most("reflect.snell_equals_Y", max_abs_diff(snell, sol.base.y), 1e-10);
    return sol;
}

void run_reflect(Run& run) {
    const ReflectedSolution sol = reflect_pipeline(run, true);
    const Side side = sol.side;
    const double orient = side == Side::lower ? 1.0 : -1.0;

    const GBSDESolution free = solve_gbsde(run.tree, run.data);
    double dom = 0.0;
    for (std::size_t u = 0; u < run.tree.size(); ++u) {
        dom = std::max(dom, orient * (free.y[u] - sol.base.y[u]));
    }
    run.at_most("reflect.dominates_unreflected", dom, 1e-10);

    const ProblemData mirrored = mirror(run.data);
    const Side other = side == Side::lower ? Side::upper : Side::lower;
    const ReflectedSolution dual = solve_reflected_direct(run.tree, mirrored, other);
    double mirror_gap = 0.0;
    for (std::size_t u = 0; u < run.tree.size(); ++u) {
        mirror_gap = std::max(mirror_gap, std::abs(sol.base.y[u] + dual.base.y[u]));
    }
    run.at_most("reflect.mirror_duality", mirror_gap, 1e-10);

    double k_max = 0.0;
    for (std::size_t u = 0; u < run.tree.size(); ++u) k_max = std::max(k_max, sol.K[u]);
    run.info("reflect.K_T_max", k_max);
    double kd_total = 0.0;
    for (std::size_t u = 0; u < run.tree.size(); ++u) kd_total += run.tree.node(u).prob * sol.dKd[u];
    run.info("reflect.expected_jump_part", kd_total);

    picard_checks(run, "reflect", side, sol.base.y);

    const EstimateReport est = apriori_check(run.tree, run.data, sol.base, &sol.K, {run.data.mu, 1.0});
    {
        auto csv = run.csv("estimates.csv", estimate_header);
        write_estimates(csv, "reflected", est);
    }
    run.check("reflect.estimate_ratio_finite", std::isfinite(est.ratio), est.ratio);
    record_inequalities(run, "reflect", est);
}

void run_stop(Run& run) {
    const ReflectedSolution sol = reflect_pipeline(run, false);
    const RunSpec& rs = run.cfg.run;
    const StoppingValueReport rep =
        verify_representation(run.tree, run.data, sol, rs.method, rs.start_layer, rs.p_list, rs.enumeration_cap, rs.tol);
    {
        auto csv = run.csv("stopping_nodes.csv", {"node", "Y", "best", "gap", "policies"});
        for (const auto& n : rep.nodes) csv.row({I(n.node), R(n.y), R(n.best), R(n.gap), R(n.policies)});
    }
    {
        auto csv = run.csv("stopping_policies.csv", {"policy", "node", "p", "J", "gap"});
        for (const auto& p : rep.policies) csv.row({I(p.policy), I(p.node), R(p.p), R(p.value), R(p.gap)});
    }
    run.at_most("stop.dominance", rep.max_dominance, rs.tol);
    if (rs.method == StopMethod::enumerate) {
        run.at_most("stop.enumerate_gap", rep.max_gap, rs.tol);
    } else {
        run.at_most("stop.nu_p_excess_over_one_over_p", rep.max_nu_p_excess, rs.tol);
        run.check("stop.nu_p_gap_nonnegative", rep.min_nu_p_gap >= -rs.tol, rep.min_nu_p_gap);
        run.info("stop.nu_p_gap_largest_p", rep.max_gap);
    }
}

void run_compare(Run& run) {
    const RunSpec& rs = run.cfg.run;
    std::size_t cases = 0;
    auto csv = run.csv("comparison.csv", {"case", "nodes", "y_violations", "max_y_violation", "min_gap", "k_checked",
                                          "k_violations", "max_k_violation"});
    std::size_t y_bad = 0, k_bad = 0;
    double worst_y = -std::numeric_limits<double>::infinity();
    double worst_k = 0.0;
    auto record = [&](const std::string& label, const ScenarioTree& tree, const ComparisonReport& r) {
        csv.row({label, I(tree.size()), I(r.y_violations), R(r.max_y_violation), R(r.min_gap), r.k_checked ? "1" : "0",
                 I(r.k_violations), R(r.max_k_violation)});
        y_bad += r.y_violations;
        k_bad += r.k_violations;
        worst_y = std::max(worst_y, r.max_y_violation);
        if (r.k_checked) worst_k = std::max(worst_k, r.max_k_violation);
        ++cases;
    };

    if (run.cfg.compare) {
        const ProblemData second = run.cfg.compare->instantiate(run.tree);
        const ComparisonReport r = compare_solutions(run.tree, run.data, second, rs.tol);
        record("configured", run.tree, r);
        auto nodes = run.csv("comparison_nodes.csv", {"node", "layer", "Y", "Y2", "gap"});
        for (std::size_t u = 0; u < run.tree.size(); ++u) {
            nodes.row({I(u), I(run.tree.node(u).layer), R(r.y[u]), R(r.y2[u]), R(r.y2[u] - r.y[u])});
        }
    }

    std::mt19937_64 rng(run.seed);
    for (std::size_t i = 0; i < rs.random_pairs; ++i) {
        const ScenarioTree tree = build_tree(random_tree_config(rng));
        RandomProblemOptions opts;
        opts.barrier = i % 4 != 3;
        opts.side = i % 2 == 0 ? Side::lower : Side::upper;
        opts.zv_free = i % 3 == 0;
        const auto [a, b] = random_ordered_pair(tree, rng, opts);
        record("random_" + I(i), tree, compare_solutions(tree, a, b, rs.tol));
    }

    if (cases > 0) {
        run.check("compare.y_ordering_violations", y_bad == 0, static_cast<double>(y_bad));
        run.info("compare.max_y_violation", worst_y);
        run.check("compare.k_ordering_violations", k_bad == 0, static_cast<double>(k_bad));
        run.info("compare.max_k_violation", worst_k);
    }
    if (!rs.nu.empty()) {
        const GammaConditionReport g = check_gamma_condition(run.tree, run.data, rs.nu, rs.samples, run.seed);
        run.check("compare.gamma_condition", g.passed, g.max_violation);
    }
    if (cases == 0 && rs.nu.empty()) {
        throw Error(ErrorCode::config_error, "compare needs a compare.problem section, run.random_pairs or run.nu");
    }
}

void run_check(Run& run) {
    const AssumptionReport rep = check_assumptions(run.data, run.tree, run.cfg.run.samples, run.seed);
    auto csv = run.csv("assumptions.csv", {"id", "passed", "max_violation", "witness_node", "witness_layer",
                                           "witness_y", "witness_y2"});
    for (const auto& c : rep.checks) {
        const auto& w = c.witness;
        csv.row({c.id, c.passed ? "1" : "0", R(c.max_violation), w ? I(w->node) : "", w ? I(w->layer) : "",
                 w ? R(w->y) : "", w ? R(w->y2) : ""});
        run.check("check." + c.id, c.passed, c.max_violation);
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, Subcommand cmd, const std::string& out_dir,
                                std::optional<std::uint64_t> seed) {
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw Error(ErrorCode::io_error, "cannot create output directory '" + out_dir + "': " + ec.message());
    }
    Run run(cfg, dir, seed.value_or(cfg.run.seed));
    switch (cmd) {
        case Subcommand::solve: run_solve(run); break;
        case Subcommand::penalize: run_penalize(run); break;
        case Subcommand::reflect: run_reflect(run); break;
        case Subcommand::stop: run_stop(run); break;
        case Subcommand::compare: run_compare(run); break;
        case Subcommand::check: run_check(run); break;
    }

    std::ofstream summary(dir / "summary.txt", std::ios::binary);
    if (!summary) {
        throw Error(ErrorCode::io_error, "cannot write summary.txt");
    }
    for (const auto& l : run.result.lines) {
        summary << (l.asserted ? (l.passed ? "PASS " : "FAIL ") : "INFO ") << l.name << ' ' << format_real(l.value)
                << '\n';
    }
    summary << (run.result.passed() ? "RESULT PASS" : "RESULT FAIL") << '\n';
    run.result.files.push_back("summary.txt");
    return run.result;
}

}  // namespace grbsde
