#include "grbsde/model.hpp"

#include "grbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <variant>

namespace grbsde {

struct StateFunction::Impl {
    struct Constant {
        double value;
    };
    struct Affine {
        double c0, ct;
        std::vector<double> w, n, nc;
        double x, a, jumps;
    };
    struct Option {
        bool is_put;
        double strike, spot, sigma, drift;
        std::size_t dim;
    };
    struct Table {
        std::vector<double> values;
    };
    struct Combine {
        enum class Op { sum, max, min } op;
        std::vector<StateFunction> terms;
    };
    struct Scaled {
        double factor;
        StateFunction of;
    };
    struct Abs {
        StateFunction of;
    };
    std::variant<Constant, Affine, Option, Table, Combine, Scaled, Abs> rule;
};

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double underlying(const ScenarioTree& tree, std::size_t node, double spot, double sigma, double drift,
                  std::size_t dim) {
    const auto& n = tree.node(node);
    const double w = dim < n.w.size() ? n.w[dim] : 0.0;
    return spot * std::exp(sigma * w + drift * tree.time_of(node));
}

}  // namespace

StateFunction::StateFunction() : impl_(std::make_shared<Impl>(Impl{Impl::Constant{0.0}})) {}

StateFunction StateFunction::constant(double c) {
    return StateFunction(std::make_shared<Impl>(Impl{Impl::Constant{c}}));
}

StateFunction StateFunction::affine(double c0, double ct, std::vector<double> w, std::vector<double> n,
                                    std::vector<double> nc, double x, double a, double jumps) {
    return StateFunction(std::make_shared<Impl>(
        Impl{Impl::Affine{c0, ct, std::move(w), std::move(n), std::move(nc), x, a, jumps}}));
}

StateFunction StateFunction::put(double strike, double spot, double sigma, double drift, std::size_t dim) {
    return StateFunction(std::make_shared<Impl>(Impl{Impl::Option{true, strike, spot, sigma, drift, dim}}));
}

StateFunction StateFunction::call(double strike, double spot, double sigma, double drift, std::size_t dim) {
    return StateFunction(std::make_shared<Impl>(Impl{Impl::Option{false, strike, spot, sigma, drift, dim}}));
}

StateFunction StateFunction::table(std::vector<double> per_layer) {
    return StateFunction(std::make_shared<Impl>(Impl{Impl::Table{std::move(per_layer)}}));
}

StateFunction StateFunction::sum(std::vector<StateFunction> terms) {
    return StateFunction(
        std::make_shared<Impl>(Impl{Impl::Combine{Impl::Combine::Op::sum, std::move(terms)}}));
}

StateFunction StateFunction::max(std::vector<StateFunction> terms) {
    return StateFunction(
        std::make_shared<Impl>(Impl{Impl::Combine{Impl::Combine::Op::max, std::move(terms)}}));
}

StateFunction StateFunction::min(std::vector<StateFunction> terms) {
    return StateFunction(
        std::make_shared<Impl>(Impl{Impl::Combine{Impl::Combine::Op::min, std::move(terms)}}));
}

StateFunction StateFunction::scaled(double factor, StateFunction of) {
    return StateFunction(std::make_shared<Impl>(Impl{Impl::Scaled{factor, std::move(of)}}));
}

StateFunction StateFunction::abs(StateFunction of) {
    return StateFunction(std::make_shared<Impl>(Impl{Impl::Abs{std::move(of)}}));
}

double StateFunction::operator()(const ScenarioTree& tree, std::size_t node) const {
    return std::visit(
        overloaded{
            [](const Impl::Constant& c) { return c.value; },
            [&](const Impl::Affine& f) {
                const auto& n = tree.node(node);
                const double t = tree.time_of(node);
                double acc = f.c0 + f.ct * t + f.x * n.x + f.a * n.a;
                for (std::size_t i = 0; i < f.w.size() && i < n.w.size(); ++i) {
                    acc += f.w[i] * n.w[i];
                }
                for (std::size_t j = 0; j < n.counts.size(); ++j) {
                    const double cnt = n.counts[j];
                    if (j < f.n.size()) {
                        acc += f.n[j] * cnt;
                    }
                    if (j < f.nc.size()) {
                        acc += f.nc[j] * (cnt - tree.mark_weight(j) * t);
                    }
                    acc += f.jumps * tree.marks()[j].value * cnt;
                }
                return acc;
            },
            [&](const Impl::Option& o) {
                const double s = underlying(tree, node, o.spot, o.sigma, o.drift, o.dim);
                return o.is_put ? std::max(o.strike - s, 0.0) : std::max(s - o.strike, 0.0);
            },
            [&](const Impl::Table& tab) {
                const std::size_t k = tree.node(node).layer;
                if (k >= tab.values.size()) {
                    throw Error(ErrorCode::config_error, "table rule has no value for layer " + std::to_string(k));
                }
                return tab.values[k];
            },
            [&](const Impl::Combine& c) {
                if (c.terms.empty()) {
                    return 0.0;
                }
                double acc = c.terms.front()(tree, node);
                for (std::size_t i = 1; i < c.terms.size(); ++i) {
                    const double v = c.terms[i](tree, node);
                    switch (c.op) {
                    case Impl::Combine::Op::sum: acc += v; break;
                    case Impl::Combine::Op::max: acc = std::max(acc, v); break;
                    case Impl::Combine::Op::min: acc = std::min(acc, v); break;
                    }
                }
                return acc;
            },
            [&](const Impl::Scaled& s) { return s.factor * s.of(tree, node); },
            [&](const Impl::Abs& s) { return std::abs(s.of(tree, node)); },
        },
        impl_->rule);
}

NodeValues StateFunction::tabulate(const ScenarioTree& tree) const {
    NodeValues out(tree.size());
    for (std::size_t u = 0; u < tree.size(); ++u) {
        out[u] = (*this)(tree, u);
    }
    return out;
}

bool Driver::depends_on_z() const {
    return std::any_of(b.begin(), b.end(), [](double x) { return x != 0.0; });
}

bool Driver::depends_on_v() const {
    return std::any_of(c.begin(), c.end(), [](double x) { return x != 0.0; });
}

ProblemData zero_problem(const ScenarioTree& tree) {
    ProblemData data;
    data.xi = NodeValues(tree.size(), 0.0);
    data.driver.b.assign(tree.brownian_dims(), 0.0);
    data.driver.c.assign(tree.mark_count(), 0.0);
    return data;
}

namespace {

double raw_f(const ScenarioTree& tree, const Driver& drv, std::size_t node, double y, std::span<const double> z,
             std::span<const double> v, double sign) {
    // sign = -1 evaluates at (-y, -z, -v).
    double acc = drv.a * sign * y;
    if (drv.form == DriverForm::cubic) {
        const double s = sign * y;
        acc -= drv.cubic * s * s * s;
    }
    for (std::size_t i = 0; i < z.size() && i < drv.b.size(); ++i) {
        acc += drv.b[i] * sign * z[i];
    }
    for (std::size_t j = 0; j < v.size() && j < drv.c.size(); ++j) {
        acc += drv.c[j] * tree.mark_weight(j) * sign * v[j];
    }
    if (drv.h.size() > 0) {
        acc += drv.h[node];
    }
    return acc;
}

}  // namespace

double evaluate_f(const ScenarioTree& tree, const ProblemData& data, std::size_t node, double y,
                  std::span<const double> z, std::span<const double> v) {
    if (v.size() != tree.mark_count()) {
        throw Error(ErrorCode::mark_dimension_error,
                    "v has " + std::to_string(v.size()) + " entries, tree has " +
                        std::to_string(tree.mark_count()) + " marks");
    }
    if (z.size() != tree.brownian_dims()) {
        throw Error(ErrorCode::brownian_dimension_error,
                    "z has " + std::to_string(z.size()) + " entries, tree has " +
                        std::to_string(tree.brownian_dims()) + " Brownian dimensions");
    }
    const auto& drv = data.driver;
    if (drv.mirrored) {
        return -raw_f(tree, drv, node, y, z, v, -1.0);
    }
    return raw_f(tree, drv, node, y, z, v, 1.0);
}

double evaluate_g(const ScenarioTree& /*tree*/, const ProblemData& data, std::size_t node, double y) {
    const auto& drv = data.driver;
    const double shift = drv.g_shift.size() > 0 ? drv.g_shift[node] : 0.0;
    if (drv.mirrored) {
        return -(drv.g_slope * (-y) + shift);
    }
    return drv.g_slope * y + shift;
}

double phi_at(const ProblemData& data, std::size_t node) {
    return data.driver.phi.size() > 0 ? data.driver.phi[node] : 1.0;
}

double psi_at(const ProblemData& data, std::size_t node) {
    return data.driver.psi.size() > 0 ? data.driver.psi[node] : 1.0;
}

ProblemData mirror(const ProblemData& data) {
    ProblemData out = data;
    for (auto& x : out.xi.raw()) {
        x = -x;
    }
    out.driver.mirrored = !data.driver.mirrored;
    if (out.barrier) {
        out.barrier->side = data.barrier->side == Side::lower ? Side::upper : Side::lower;
        for (auto& x : out.barrier->level.raw()) {
            x = -x;
        }
    }
    return out;
}

bool AssumptionReport::all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const AssumptionCheck& c) { return c.passed; });
}

const AssumptionCheck& AssumptionReport::get(const std::string& id) const {
    for (const auto& c : checks) {
        if (c.id == id) {
            return c;
        }
    }
    throw std::out_of_range("no assumption check named " + id);
}

namespace {

constexpr double kSlack = 1e-10;

void record(AssumptionCheck& check, double violation, const Witness& w) {
    if (!(violation > 0.0)) {
        return;
    }
    check.passed = false;
    if (!check.witness) {
        check.witness = w;
    }
    if (violation > check.max_violation) {
        check.max_violation = violation;
        check.worst = w;
    }
}

double q_norm(const ScenarioTree& tree, std::span<const double> v) {
    double acc = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
        acc += tree.mark_weight(j) * v[j] * v[j];
    }
    return std::sqrt(acc);
}

double euclid(std::span<const double> z) {
    double acc = 0.0;
    for (double x : z) {
        acc += x * x;
    }
    return std::sqrt(acc);
}

struct Sample {
    std::size_t node;
    double y, y2;
    std::vector<double> z, z2, v, v2;
};

}  // namespace

AssumptionReport check_assumptions(const ProblemData& data, const ScenarioTree& tree, std::size_t samples,
                                   std::uint64_t seed, const SamplingBox& box) {
    if (samples == 0) {
        throw Error(ErrorCode::precondition_violated, "samples must be >= 1");
    }
    const auto& drv = data.driver;
    const std::size_t d = tree.brownian_dims();
    const std::size_t m = tree.mark_count();
    const std::size_t K = tree.steps();
    const std::size_t interior = tree.layer_begin(K);

    AssumptionReport report;
    AssumptionCheck constants{"H2.constants", "beta < 0 and kappa > 0", true, 0.0, {}, {}};
    AssumptionCheck bounds{"H2.ii", "phi >= 1 and psi >= 1 on every node", true, 0.0, {}, {}};
    AssumptionCheck mono_f{"H2.iii", "(y-y')(f(y)-f(y')) <= alpha |y-y'|^2", true, 0.0, {}, {}};
    AssumptionCheck mono_g{"H2.iv", "(y-y')(g(y)-g(y')) <= beta |y-y'|^2 where dA > 0", true, 0.0, {}, {}};
    AssumptionCheck lip{"H2.v", "|f(y,z,v)-f(y,z',v')| <= kappa (|z-z'| + |v-v'|_Q)", true, 0.0, {}, {}};
    AssumptionCheck growth{"H2.vi", "|f(y,0,0)| <= phi + kappa|y| and |g(y)| <= psi + kappa|y|", true, 0.0, {}, {}};
    AssumptionCheck terminal{"H1", "xi finite on every terminal node", true, 0.0, {}, {}};
    AssumptionCheck step{"step-size", "1 - alpha*dt - beta*dA > 0 on every interior node", true, 0.0, {}, {}};

    if (!(drv.beta < 0.0)) {
        Witness w;
        w.magnitude = drv.beta;
        record(constants, std::max(drv.beta, 0.0) + 1e-300, w);
    }
    if (!(drv.kappa > 0.0)) {
        Witness w;
        w.magnitude = drv.kappa;
        record(constants, std::max(-drv.kappa, 0.0) + 1e-300, w);
    }
    for (std::size_t u = 0; u < tree.size(); ++u) {
        Witness w;
        w.node = u;
        w.layer = tree.node(u).layer;
        const double lo = std::min(phi_at(data, u), psi_at(data, u));
        w.magnitude = 1.0 - lo;
        record(bounds, 1.0 - lo, w);
    }
    for (std::size_t u = interior; u < tree.size(); ++u) {
        if (!data.xi.defined(u) || !std::isfinite(data.xi[u])) {
            Witness w;
            w.node = u;
            w.layer = K;
            w.magnitude = 1.0;
            record(terminal, 1.0, w);
        }
    }
    for (std::size_t u = 0; u < interior; ++u) {
        const double dt = tree.step_of(u);
        const double margin = 1.0 - drv.alpha * dt - drv.beta * tree.node(u).da;
        if (!(margin > 0.0)) {
            Witness w;
            w.node = u;
            w.layer = tree.node(u).layer;
            w.magnitude = -margin;
            record(step, -margin + 1e-300, w);
        }
    }

    // Canonical probes first so that simple sign errors produce readable witnesses.
    // They sit on the first node where A moves, so that g is actually exercised.
    std::size_t probe_node = 0;
    for (std::size_t u = 0; u < interior; ++u) {
        if (tree.node(u).da > 0.0) {
            probe_node = u;
            break;
        }
    }
    std::vector<Sample> probes;
    const std::vector<double> zero_z(d, 0.0), zero_v(m, 0.0);
    for (auto [y, y2] : {std::pair{1.0, 0.0}, std::pair{-1.0, 0.0}, std::pair{box.y, -box.y}, std::pair{0.5, -0.5}}) {
        probes.push_back({probe_node, y, y2, zero_z, zero_z, zero_v, zero_v});
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, interior - 1);
    std::uniform_real_distribution<double> uy(-box.y, box.y), uz(-box.z, box.z), uv(-box.v, box.v);
    for (std::size_t s = 0; s < samples; ++s) {
        Sample smp{pick(rng), uy(rng), uy(rng), {}, {}, {}, {}};
        for (std::size_t i = 0; i < d; ++i) {
            smp.z.push_back(uz(rng));
            smp.z2.push_back(uz(rng));
        }
        for (std::size_t j = 0; j < m; ++j) {
            smp.v.push_back(uv(rng));
            smp.v2.push_back(uv(rng));
        }
        probes.push_back(std::move(smp));
    }

    for (const auto& s : probes) {
        Witness w;
        w.node = s.node;
        w.layer = tree.node(s.node).layer;
        w.y = s.y;
        w.y2 = s.y2;
        w.z = s.z;
        w.z2 = s.z2;
        w.v = s.v;
        w.v2 = s.v2;
        const bool g_active = tree.node(s.node).da > 0.0;
        const double dy = s.y - s.y2;
        if (dy != 0.0) {
            const double df = evaluate_f(tree, data, s.node, s.y, s.z, s.v) -
                              evaluate_f(tree, data, s.node, s.y2, s.z, s.v);
            const double ratio_f = dy * df / (dy * dy);
            w.magnitude = ratio_f - drv.alpha;
            record(mono_f, ratio_f - drv.alpha - kSlack * std::max(1.0, std::abs(drv.alpha)), w);

            // g only enters where dA > 0.
            if (g_active) {
                const double dg = evaluate_g(tree, data, s.node, s.y) - evaluate_g(tree, data, s.node, s.y2);
                const double ratio_g = dy * dg / (dy * dy);
                w.magnitude = ratio_g - drv.beta;
                record(mono_g, ratio_g - drv.beta - kSlack * std::max(1.0, std::abs(drv.beta)), w);
            }
        }
        std::vector<double> dz(d), dv(m);
        for (std::size_t i = 0; i < d; ++i) {
            dz[i] = s.z[i] - s.z2[i];
        }
        for (std::size_t j = 0; j < m; ++j) {
            dv[j] = s.v[j] - s.v2[j];
        }
        const double dist = euclid(dz) + q_norm(tree, dv);
        if (dist > 0.0) {
            const double df = std::abs(evaluate_f(tree, data, s.node, s.y, s.z, s.v) -
                                       evaluate_f(tree, data, s.node, s.y, s.z2, s.v2));
            w.magnitude = df / dist - drv.kappa;
            record(lip, df / dist - drv.kappa - kSlack * std::max(1.0, drv.kappa), w);
        }
        for (double y : {s.y, s.y2}) {
            const double f0 = std::abs(evaluate_f(tree, data, s.node, y, zero_z, zero_v));
            const double g0 = g_active ? std::abs(evaluate_g(tree, data, s.node, y)) : 0.0;
            const double bf = phi_at(data, s.node) + drv.kappa * std::abs(y);
            const double bg = psi_at(data, s.node) + drv.kappa * std::abs(y);
            Witness gw = w;
            gw.y = y;
            gw.magnitude = std::max(f0 - bf, g0 - bg);
            record(growth, std::max(f0 - bf - kSlack * std::max(1.0, bf), g0 - bg - kSlack * std::max(1.0, bg)), gw);
        }
    }

    report.checks = {constants, bounds, mono_f, mono_g, lip, growth, terminal, step};

    if (data.barrier) {
        const bool lower = data.barrier->side == Side::lower;
        AssumptionCheck barrier{lower ? "H3" : "H3''",
                                lower ? "L_T <= xi on every terminal node" : "xi <= U_T on every terminal node",
                                true, 0.0, {}, {}};
        const auto& level = data.barrier->level;
        for (std::size_t u = interior; u < tree.size(); ++u) {
            Witness w;
            w.node = u;
            w.layer = K;
            if (!level.defined(u)) {
                w.magnitude = 1.0;
                record(barrier, 1.0, w);
                continue;
            }
            const double gap = lower ? level[u] - data.xi[u] : data.xi[u] - level[u];
            w.magnitude = gap;
            record(barrier, gap, w);
        }
        report.checks.push_back(barrier);
    }
    return report;
}

}  // namespace grbsde
