#include "grbsde/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace grbsde {

using nlohmann::json;

namespace {

std::string join(const std::vector<ConfigViolation>& v) {
    std::string out;
    for (const auto& x : v) {
        if (!out.empty()) out += "; ";
        out += x.pointer + ": " + x.message;
    }
    return out;
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

class Validator {
public:
    std::vector<ConfigViolation> violations;

    void fail(const std::string& ptr, const std::string& msg) { violations.push_back({ptr.empty() ? "/" : ptr, msg}); }

    bool object(const json& j, const std::string& ptr) {
        if (!j.is_object()) {
            fail(ptr, "expected an object");
            return false;
        }
        return true;
    }

    void only(const json& j, const std::string& ptr, std::initializer_list<const char*> keys) {
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!allowed.count(it.key())) {
                fail(ptr + "/" + it.key(), "unknown property");
            }
        }
    }

    double number(const json& j, const char* key, const std::string& ptr, double fallback) {
        if (!j.contains(key)) return fallback;
        const json& x = j.at(key);
        if (!x.is_number()) {
            fail(ptr + "/" + key, "expected a number");
            return fallback;
        }
        const double v = x.get<double>();
        if (!std::isfinite(v)) {
            fail(ptr + "/" + key, "must be finite");
            return fallback;
        }
        return v;
    }

    std::uint64_t integer(const json& j, const char* key, const std::string& ptr, std::uint64_t fallback) {
        if (!j.contains(key)) return fallback;
        const json& x = j.at(key);
        if (x.is_number_unsigned()) return x.get<std::uint64_t>();
        if (x.is_number_integer() && x.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(x.get<std::int64_t>());
        fail(ptr + "/" + key, "expected a nonnegative integer");
        return fallback;
    }

    bool boolean(const json& j, const char* key, const std::string& ptr, bool fallback) {
        if (!j.contains(key)) return fallback;
        if (!j.at(key).is_boolean()) {
            fail(ptr + "/" + key, "expected true or false");
            return fallback;
        }
        return j.at(key).get<bool>();
    }

    std::string string(const json& j, const char* key, const std::string& ptr, const std::string& fallback) {
        if (!j.contains(key)) return fallback;
        if (!j.at(key).is_string()) {
            fail(ptr + "/" + key, "expected a string");
            return fallback;
        }
        return j.at(key).get<std::string>();
    }

    std::vector<double> numbers(const json& j, const char* key, const std::string& ptr, std::vector<double> fallback) {
        if (!j.contains(key)) return fallback;
        const json& x = j.at(key);
        if (!x.is_array()) {
            fail(ptr + "/" + key, "expected an array of numbers");
            return fallback;
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!x[i].is_number()) {
                fail(ptr + "/" + key + "/" + std::to_string(i), "expected a number");
                out.push_back(0.0);
            } else {
                out.push_back(x[i].get<double>());
            }
        }
        return out;
    }

    void length(const std::vector<double>& v, std::size_t n, const std::string& ptr, const std::string& what) {
        if (v.size() != n) {
            fail(ptr, "expected " + std::to_string(n) + " entries (" + what + "), got " + std::to_string(v.size()));
        }
    }

    // Dimensions needed to validate state functions.
    std::size_t dims = 0;
    std::size_t marks = 0;
    std::size_t steps = 0;

    StateFunction state(const json& j, const std::string& ptr) {
        if (j.is_number()) {
            return StateFunction::constant(j.get<double>());
        }
        if (!object(j, ptr)) return StateFunction{};
        const std::string kind = string(j, "kind", ptr, "");
        if (kind == "constant") {
            only(j, ptr, {"kind", "value"});
            return StateFunction::constant(number(j, "value", ptr, 0.0));
        }
        if (kind == "affine") {
            only(j, ptr, {"kind", "c0", "ct", "w", "n", "nc", "x", "a", "jumps"});
            auto w = numbers(j, "w", ptr, std::vector<double>(dims, 0.0));
            auto n = numbers(j, "n", ptr, std::vector<double>(marks, 0.0));
            auto nc = numbers(j, "nc", ptr, std::vector<double>(marks, 0.0));
            length(w, dims, ptr + "/w", "one per Brownian dimension");
            length(n, marks, ptr + "/n", "one per mark");
            length(nc, marks, ptr + "/nc", "one per mark");
            w.resize(dims, 0.0);
            n.resize(marks, 0.0);
            nc.resize(marks, 0.0);
            return StateFunction::affine(number(j, "c0", ptr, 0.0), number(j, "ct", ptr, 0.0), w, n, nc,
                                         number(j, "x", ptr, 0.0), number(j, "a", ptr, 0.0),
                                         number(j, "jumps", ptr, 0.0));
        }
        if (kind == "put" || kind == "call") {
            only(j, ptr, {"kind", "strike", "spot", "sigma", "drift", "dim"});
            const std::size_t dim = integer(j, "dim", ptr, 0);
            if (dim >= dims) {
                fail(ptr + "/dim", "Brownian dimension " + std::to_string(dim) + " does not exist (d = " +
                                       std::to_string(dims) + ")");
            }
            const double strike = number(j, "strike", ptr, 1.0);
            const double spot = number(j, "spot", ptr, 1.0);
            const double sigma = number(j, "sigma", ptr, 0.2);
            const double drift = number(j, "drift", ptr, 0.0);
            const std::size_t safe = dims == 0 ? 0 : std::min(dim, dims - 1);
            return kind == "put" ? StateFunction::put(strike, spot, sigma, drift, safe)
                                 : StateFunction::call(strike, spot, sigma, drift, safe);
        }
        if (kind == "table") {
            only(j, ptr, {"kind", "values"});
            auto v = numbers(j, "values", ptr, {});
            length(v, steps + 1, ptr + "/values", "one per time instant");
            v.resize(steps + 1, 0.0);
            return StateFunction::table(v);
        }
        if (kind == "sum" || kind == "max" || kind == "min") {
            only(j, ptr, {"kind", "terms"});
            std::vector<StateFunction> terms;
            if (!j.contains("terms") || !j.at("terms").is_array() || j.at("terms").empty()) {
                fail(ptr + "/terms", "expected a nonempty array");
            } else {
                for (std::size_t i = 0; i < j.at("terms").size(); ++i) {
                    terms.push_back(state(j.at("terms")[i], ptr + "/terms/" + std::to_string(i)));
                }
            }
            if (terms.empty()) return StateFunction{};
            if (kind == "sum") return StateFunction::sum(std::move(terms));
            if (kind == "max") return StateFunction::max(std::move(terms));
            return StateFunction::min(std::move(terms));
        }
        if (kind == "scaled" || kind == "abs") {
            if (kind == "scaled") {
                only(j, ptr, {"kind", "factor", "of"});
            } else {
                only(j, ptr, {"kind", "of"});
            }
            if (!j.contains("of")) {
                fail(ptr + "/of", "missing");
                return StateFunction{};
            }
            auto of = state(j.at("of"), ptr + "/of");
            return kind == "abs" ? StateFunction::abs(std::move(of))
                                 : StateFunction::scaled(number(j, "factor", ptr, 1.0), std::move(of));
        }
        fail(ptr + "/kind", "unknown state function kind '" + kind + "'");
        return StateFunction{};
    }
};

struct TreeFacts {
    std::vector<double> dt;
    std::vector<double> da_min;  // smallest A-increment per step
};

TreeFacts read_tree(Validator& val, const json& j, TreeConfig& cfg) {
    const std::string ptr = "/tree";
    TreeFacts facts;
    if (!val.object(j, ptr)) return facts;
    val.only(j, ptr, {"steps", "horizon", "grid", "brownian_dims", "marks", "extra_factor", "a_schedule", "max_nodes"});

    if (j.contains("grid")) {
        auto t = val.numbers(j, "grid", ptr, {});
        if (j.contains("steps") || j.contains("horizon")) {
            val.fail(ptr + "/grid", "give either grid or steps/horizon, not both");
        }
        try {
            cfg.grid = TimeGrid(t);
        } catch (const Error& e) {
            val.fail(ptr + "/grid", e.what());
        }
    } else {
        const auto steps = val.integer(j, "steps", ptr, 0);
        const double horizon = val.number(j, "horizon", ptr, 1.0);
        if (steps < 1) val.fail(ptr + "/steps", "at least one step is required");
        if (!(horizon > 0.0)) val.fail(ptr + "/horizon", "horizon must be positive");
        if (steps >= 1 && horizon > 0.0) cfg.grid = TimeGrid::uniform(steps, horizon);
    }
    const std::size_t K = cfg.grid.steps();
    for (std::size_t k = 0; k < K; ++k) facts.dt.push_back(cfg.grid.step(k));
    double dt_max = 0.0;
    for (double x : facts.dt) dt_max = std::max(dt_max, x);

    cfg.brownian_dims = val.integer(j, "brownian_dims", ptr, 1);
    if (cfg.brownian_dims > 16) val.fail(ptr + "/brownian_dims", "at most 16 Brownian dimensions");

    if (j.contains("marks")) {
        const json& marks = j.at("marks");
        if (!marks.is_array()) {
            val.fail(ptr + "/marks", "expected an array");
        } else {
            for (std::size_t i = 0; i < marks.size(); ++i) {
                const std::string mp = ptr + "/marks/" + std::to_string(i);
                if (!val.object(marks[i], mp)) continue;
                val.only(marks[i], mp, {"label", "value", "weight"});
                Mark mk;
                mk.label = val.string(marks[i], "label", mp, "e" + std::to_string(i + 1));
                mk.value = val.number(marks[i], "value", mp, 1.0);
                mk.weight = val.number(marks[i], "weight", mp, 0.0);
                if (mk.weight < 0.0) {
                    val.fail(mp + "/weight", "marks[" + std::to_string(i) + "]: intensity must be nonnegative");
                }
                if (mk.weight * dt_max >= 1.0) {
                    val.fail(mp + "/weight", "marks[" + std::to_string(i) + "]: q*dt = " + fmt(mk.weight * dt_max) +
                                                 " must be < 1");
                }
                cfg.marks.push_back(mk);
            }
        }
    }
    val.dims = cfg.brownian_dims;
    val.marks = cfg.marks.size();
    val.steps = K;

    cfg.extra_factor = val.boolean(j, "extra_factor", ptr, false);
    cfg.max_nodes = val.integer(j, "max_nodes", ptr, 5'000'000);

    facts.da_min.assign(K, 0.0);
    cfg.a_schedule.increments.assign(K, 0.0);
    if (j.contains("a_schedule")) {
        const std::string ap = ptr + "/a_schedule";
        const json& a = j.at("a_schedule");
        if (val.object(a, ap)) {
            const std::string kind = val.string(a, "kind", ap, "deterministic");
            if (kind == "deterministic") {
                val.only(a, ap, {"kind", "increments"});
                auto inc = val.numbers(a, "increments", ap, std::vector<double>(K, 0.0));
                val.length(inc, K, ap + "/increments", "one per step");
                inc.resize(K, 0.0);
                for (std::size_t k = 0; k < K; ++k) {
                    if (inc[k] < 0.0) val.fail(ap + "/increments/" + std::to_string(k), "A must be nondecreasing");
                }
                cfg.a_schedule.increments = inc;
                facts.da_min = inc;
            } else if (kind == "linear") {
                val.only(a, ap, {"kind", "rate"});
                const double rate = val.number(a, "rate", ap, 0.0);
                if (rate < 0.0) val.fail(ap + "/rate", "A must be nondecreasing");
                for (std::size_t k = 0; k < K; ++k) cfg.a_schedule.increments[k] = rate * facts.dt[k];
                facts.da_min = cfg.a_schedule.increments;
            } else if (kind == "mark_driven") {
                val.only(a, ap, {"kind", "rate", "jump_weights"});
                cfg.a_schedule.kind = ASchedule::Kind::mark_driven;
                cfg.a_schedule.increments.clear();
                cfg.a_schedule.rate = val.number(a, "rate", ap, 0.0);
                if (cfg.a_schedule.rate < 0.0) val.fail(ap + "/rate", "A must be nondecreasing");
                auto w = val.numbers(a, "jump_weights", ap, std::vector<double>(cfg.marks.size(), 0.0));
                val.length(w, cfg.marks.size(), ap + "/jump_weights", "one per mark");
                for (std::size_t i = 0; i < w.size(); ++i) {
                    if (w[i] < 0.0) val.fail(ap + "/jump_weights/" + std::to_string(i), "A must be nondecreasing");
                }
                w.resize(cfg.marks.size(), 0.0);
                cfg.a_schedule.jump_weights = w;
                for (std::size_t k = 0; k < K; ++k) facts.da_min[k] = cfg.a_schedule.rate * facts.dt[k];
            } else {
                val.fail(ap + "/kind", "expected deterministic, linear or mark_driven");
            }
        }
    }

    if (K > 0) {
        const double branching = std::ldexp(1.0, static_cast<int>(cfg.brownian_dims + cfg.marks.size() +
                                                                    (cfg.extra_factor ? 1 : 0)));
        double total = 0.0, layer = 1.0;
        for (std::size_t k = 0; k <= K; ++k) {
            total += layer;
            layer *= branching;
        }
        if (total > static_cast<double>(cfg.max_nodes)) {
            val.fail(ptr, "the tree would have " + fmt(total) + " nodes, above max_nodes = " +
                              std::to_string(cfg.max_nodes));
        }
    }
    return facts;
}

ProblemSpec read_problem(Validator& val, const json& j, const std::string& ptr, const TreeFacts& facts) {
    ProblemSpec spec;
    if (!val.object(j, ptr)) return spec;
    val.only(j, ptr, {"driver", "xi", "barrier", "mu"});

    spec.mu = val.number(j, "mu", ptr, 2.0);
    if (!(spec.mu > 1.0)) val.fail(ptr + "/mu", "mu = " + fmt(spec.mu) + " must be > 1");

    if (j.contains("xi")) spec.xi = val.state(j.at("xi"), ptr + "/xi");

    DriverSpec& drv = spec.driver;
    drv.b.assign(val.dims, 0.0);
    drv.c.assign(val.marks, 0.0);
    if (j.contains("driver")) {
        const std::string dp = ptr + "/driver";
        const json& d = j.at("driver");
        if (val.object(d, dp)) {
            val.only(d, dp, {"form", "a", "cubic", "b", "c", "h", "g_slope", "g_shift", "alpha", "beta", "kappa",
                             "phi", "psi"});
            const std::string form = val.string(d, "form", dp, "linear");
            if (form == "linear") {
                drv.form = DriverForm::linear;
            } else if (form == "cubic") {
                drv.form = DriverForm::cubic;
            } else {
                val.fail(dp + "/form", "expected linear or cubic");
            }
            drv.a = val.number(d, "a", dp, 0.0);
            drv.cubic = val.number(d, "cubic", dp, drv.form == DriverForm::cubic ? 1.0 : 0.0);
            if (drv.form == DriverForm::linear && drv.cubic != 0.0) {
                val.fail(dp + "/cubic", "a linear driver has no cubic term");
            }
            if (drv.cubic < 0.0) val.fail(dp + "/cubic", "the cubic coefficient must be >= 0 (monotone in y)");
            drv.b = val.numbers(d, "b", dp, drv.b);
            val.length(drv.b, val.dims, dp + "/b", "one per Brownian dimension");
            drv.b.resize(val.dims, 0.0);
            drv.c = val.numbers(d, "c", dp, drv.c);
            val.length(drv.c, val.marks, dp + "/c", "one per mark");
            drv.c.resize(val.marks, 0.0);
            if (d.contains("h")) drv.h = val.state(d.at("h"), dp + "/h");
            drv.g_slope = val.number(d, "g_slope", dp, 0.0);
            if (d.contains("g_shift")) drv.g_shift = val.state(d.at("g_shift"), dp + "/g_shift");
            drv.alpha = val.number(d, "alpha", dp, drv.a);
            drv.beta = val.number(d, "beta", dp, -1.0);
            drv.kappa = val.number(d, "kappa", dp, 1.0);
            if (!(drv.beta < 0.0)) {
                val.fail(dp + "/beta", "beta = " + fmt(drv.beta) + " must be negative (H2)(iv)");
            }
            if (!(drv.kappa > 0.0)) {
                val.fail(dp + "/kappa", "kappa = " + fmt(drv.kappa) + " must be positive (H2)(v)");
            }
            if (d.contains("phi")) drv.phi = val.state(d.at("phi"), dp + "/phi");
            if (d.contains("psi")) drv.psi = val.state(d.at("psi"), dp + "/psi");
        }
    }
    // Step-size condition 1 - alpha dt - beta dA > 0 on every step.
    for (std::size_t k = 0; k < facts.dt.size(); ++k) {
        const double da = drv.beta < 0.0 ? facts.da_min[k] : 0.0;
        const double margin = 1.0 - drv.alpha * facts.dt[k] - drv.beta * da;
        if (!(margin > 0.0)) {
            val.fail(ptr + "/driver/alpha", "step " + std::to_string(k) + ": 1 - alpha*dt - beta*dA = " + fmt(margin) +
                                                 " must be > 0; refine the grid");
            break;
        }
    }

    if (j.contains("barrier")) {
        const std::string bp = ptr + "/barrier";
        const json& b = j.at("barrier");
        if (val.object(b, bp)) {
            val.only(b, bp, {"side", "level", "jump_layers"});
            BarrierSpec bar;
            const std::string side = val.string(b, "side", bp, "lower");
            if (side == "lower") {
                bar.side = Side::lower;
            } else if (side == "upper") {
                bar.side = Side::upper;
            } else {
                val.fail(bp + "/side", "expected lower or upper");
            }
            if (b.contains("level")) {
                bar.level = val.state(b.at("level"), bp + "/level");
            } else {
                val.fail(bp + "/level", "missing");
            }
            if (b.contains("jump_layers")) {
                const json& jl = b.at("jump_layers");
                if (!jl.is_array()) {
                    val.fail(bp + "/jump_layers", "expected an array of layer indices");
                } else {
                    for (std::size_t i = 0; i < jl.size(); ++i) {
                        const std::string ip = bp + "/jump_layers/" + std::to_string(i);
                        if (!jl[i].is_number_integer() || jl[i].get<std::int64_t>() < 1 ||
                            jl[i].get<std::int64_t>() > static_cast<std::int64_t>(val.steps)) {
                            val.fail(ip, "expected a layer in [1, " + std::to_string(val.steps) + "]");
                        } else {
                            bar.jump_layers.push_back(jl[i].get<std::size_t>());
                        }
                    }
                }
            }
            spec.barrier = std::move(bar);
        }
    }
    return spec;
}

RunSpec read_run(Validator& val, const json& j, std::size_t steps, std::size_t marks) {
    const std::string ptr = "/run";
    RunSpec run;
    if (!val.object(j, ptr)) return run;
    val.only(j, ptr, {"n_list", "p_list", "tol", "seed", "samples", "enumeration_cap", "method", "start_layer",
                      "picard", "nu", "random_pairs"});
    run.n_list = val.numbers(j, "n_list", ptr, run.n_list);
    if (run.n_list.empty()) val.fail(ptr + "/n_list", "at least one penalty level is required");
    for (std::size_t i = 0; i < run.n_list.size(); ++i) {
        if (!(run.n_list[i] > 0.0)) val.fail(ptr + "/n_list/" + std::to_string(i), "penalty levels must be positive");
        if (i > 0 && !(run.n_list[i] > run.n_list[i - 1])) {
            val.fail(ptr + "/n_list/" + std::to_string(i), "the n-list must be strictly increasing");
        }
    }
    run.p_list = val.numbers(j, "p_list", ptr, run.p_list);
    for (std::size_t i = 0; i < run.p_list.size(); ++i) {
        if (!(run.p_list[i] >= 1.0)) val.fail(ptr + "/p_list/" + std::to_string(i), "p must be >= 1");
    }
    run.tol = val.number(j, "tol", ptr, run.tol);
    if (!(run.tol > 0.0)) val.fail(ptr + "/tol", "tolerance must be positive");
    run.seed = val.integer(j, "seed", ptr, run.seed);
    run.samples = val.integer(j, "samples", ptr, run.samples);
    if (run.samples < 1) val.fail(ptr + "/samples", "at least one sample is required");
    run.enumeration_cap = val.number(j, "enumeration_cap", ptr, run.enumeration_cap);
    if (!(run.enumeration_cap >= 1.0)) val.fail(ptr + "/enumeration_cap", "the cap must be >= 1");
    const std::string method = val.string(j, "method", ptr, "enumerate");
    if (method == "enumerate" || method == "nu_p") {
        run.method = parse_method(method);
    } else {
        val.fail(ptr + "/method", "expected enumerate or nu_p");
    }
    run.start_layer = val.integer(j, "start_layer", ptr, 0);
    if (run.start_layer > steps) val.fail(ptr + "/start_layer", "start layer beyond the last layer");
    if (j.contains("picard")) {
        const json& p = j.at("picard");
        if (val.object(p, ptr + "/picard")) {
            val.only(p, ptr + "/picard", {"max_iters", "tol"});
            run.picard_max_iters = val.integer(p, "max_iters", ptr + "/picard", run.picard_max_iters);
            if (run.picard_max_iters < 3) val.fail(ptr + "/picard/max_iters", "at least 3 iterations are required");
            run.picard_tol = val.number(p, "tol", ptr + "/picard", run.picard_tol);
            if (run.picard_tol < 0.0) val.fail(ptr + "/picard/tol", "tolerance must be nonnegative");
        }
    }
    run.nu = val.numbers(j, "nu", ptr, {});
    if (j.contains("nu")) {
        val.length(run.nu, marks, ptr + "/nu", "one per mark");
        for (std::size_t i = 0; i < run.nu.size(); ++i) {
            if (run.nu[i] < 0.0) val.fail(ptr + "/nu/" + std::to_string(i), "nu must be nonnegative");
        }
    }
    run.random_pairs = val.integer(j, "random_pairs", ptr, 0);
    return run;
}

}  // namespace

ConfigError::ConfigError(std::vector<ConfigViolation> violations)
    : Error(ErrorCode::config_error, join(violations)), violations_(std::move(violations)) {}

ProblemData ProblemSpec::instantiate(const ScenarioTree& tree) const {
    ProblemData data;
    data.xi = xi.tabulate(tree);
    data.mu = mu;
    Driver& d = data.driver;
    d.form = driver.form;
    d.a = driver.a;
    d.cubic = driver.cubic;
    d.b = driver.b;
    d.c = driver.c;
    d.h = driver.h.tabulate(tree);
    d.g_slope = driver.g_slope;
    d.g_shift = driver.g_shift.tabulate(tree);
    d.alpha = driver.alpha;
    d.beta = driver.beta;
    d.kappa = driver.kappa;
    if (driver.phi) d.phi = driver.phi->tabulate(tree);
    if (driver.psi) d.psi = driver.psi->tabulate(tree);
    if (barrier) {
        Barrier b;
        b.side = barrier->side;
        b.level = barrier->level.tabulate(tree);
        b.jump_times.assign(tree.steps() + 1, false);
        for (std::size_t k : barrier->jump_layers) {
            b.jump_times.at(k) = true;
        }
        data.barrier = std::move(b);
    }
    return data;
}

ExperimentConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({{"/", std::string("malformed JSON: ") + e.what()}});
    }
    Validator val;
    ExperimentConfig cfg;
    if (!val.object(doc, "")) {
        throw ConfigError(val.violations);
    }
    val.only(doc, "", {"tree", "problem", "compare", "run", "output", "description"});
    if (doc.contains("description") && !doc.at("description").is_string()) {
        val.fail("/description", "expected a string");
    }
    TreeFacts facts;
    if (doc.contains("tree")) {
        facts = read_tree(val, doc.at("tree"), cfg.tree);
    } else {
        val.fail("/tree", "missing");
    }
    if (doc.contains("problem")) {
        cfg.problem = read_problem(val, doc.at("problem"), "/problem", facts);
    } else {
        val.fail("/problem", "missing");
    }
    if (doc.contains("compare")) {
        const json& c = doc.at("compare");
        if (val.object(c, "/compare")) {
            val.only(c, "/compare", {"problem"});
            if (c.contains("problem")) {
                cfg.compare = read_problem(val, c.at("problem"), "/compare/problem", facts);
            }
        }
    }
    if (doc.contains("run")) {
        cfg.run = read_run(val, doc.at("run"), val.steps, val.marks);
    }
    if (doc.contains("output")) {
        const json& o = doc.at("output");
        if (val.object(o, "/output")) {
            val.only(o, "/output", {"dir"});
            cfg.out_dir = val.string(o, "dir", "/output", cfg.out_dir);
        }
    }
    if (!val.violations.empty()) {
        throw ConfigError(val.violations);
    }
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot read config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

}  // namespace grbsde
