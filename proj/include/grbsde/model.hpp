#pragma once

#include "grbsde/scenario.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace grbsde {

/**
 * Adapted rule mapping a tree node (time, cumulative Brownian surrogate W, mark
 * counts N, extra factor X, A) to a real value. Used for the terminal condition,
 * barriers, bound processes and the state-dependent shifts of the drivers.
 */
class StateFunction {
public:
    StateFunction();  // constant 0

    static StateFunction constant(double c);
    /// c0 + ct*t + w.W + n.N + nc.(N - q t) + x*X + a*A + jumps * sum_j value_j N_j
    static StateFunction affine(double c0, double ct, std::vector<double> w, std::vector<double> n,
                                std::vector<double> nc, double x, double a, double jumps);
    /// max(strike - spot*exp(sigma*W_dim + drift*t), 0)
    static StateFunction put(double strike, double spot, double sigma, double drift, std::size_t dim);
    /// max(spot*exp(sigma*W_dim + drift*t) - strike, 0)
    static StateFunction call(double strike, double spot, double sigma, double drift, std::size_t dim);
    /// Deterministic value per layer.
    static StateFunction table(std::vector<double> per_layer);
    static StateFunction sum(std::vector<StateFunction> terms);
    static StateFunction max(std::vector<StateFunction> terms);
    static StateFunction min(std::vector<StateFunction> terms);
    static StateFunction scaled(double factor, StateFunction of);
    static StateFunction abs(StateFunction of);

    double operator()(const ScenarioTree& tree, std::size_t node) const;
    NodeValues tabulate(const ScenarioTree& tree) const;

    struct Impl;

private:
    explicit StateFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

enum class Side { lower, upper };

enum class DriverForm { linear, cubic };

/**
 * f(t,u,y,z,v) = -cubic*y^3 + a*y + b.z + sum_j c_j q_j v_j + h(u)
 * g(t,u,y)     = g_slope*y + g_shift(u)
 *
 * alpha, beta, kappa are the declared monotonicity / Lipschitz constants; phi and psi
 * the linear-growth bound processes. Empty NodeValues stand for h = 0 and phi = psi = 1.
 * A mirrored driver evaluates -f(t,u,-y,-z,-v) and -g(t,u,-y).
 */
struct Driver {
    DriverForm form = DriverForm::linear;
    double a = 0.0;
    double cubic = 0.0;
    std::vector<double> b;
    std::vector<double> c;
    NodeValues h;
    double g_slope = 0.0;
    NodeValues g_shift;

    double alpha = 0.0;
    double beta = -1.0;
    double kappa = 1.0;
    NodeValues phi;
    NodeValues psi;

    bool mirrored = false;

    bool depends_on_z() const;
    bool depends_on_v() const;
};

struct Barrier {
    Side side = Side::lower;
    NodeValues level;
    /// jump_times[k] flags t_k as a scheduled (predictable) down-jump of a lower barrier
    /// (up-jump of an upper one). Empty means no flags.
    std::vector<bool> jump_times;

    bool flagged(std::size_t k) const { return k < jump_times.size() && jump_times[k]; }
};

struct ProblemData {
    NodeValues xi;  // defined on the last layer
    Driver driver;
    std::optional<Barrier> barrier;
    double mu = 2.0;
};

/// xi = 0, f = g = 0, alpha = 0, beta = -1, kappa = 1, phi = psi = 1, no barrier.
ProblemData zero_problem(const ScenarioTree& tree);

double evaluate_f(const ScenarioTree& tree, const ProblemData& data, std::size_t node, double y,
                  std::span<const double> z, std::span<const double> v);
double evaluate_g(const ScenarioTree& tree, const ProblemData& data, std::size_t node, double y);

double phi_at(const ProblemData& data, std::size_t node);
double psi_at(const ProblemData& data, std::size_t node);

/// Problem whose lower (upper) reflected solution is the negated upper (lower) one.
ProblemData mirror(const ProblemData& data);

struct Witness {
    std::size_t node = npos;
    std::size_t layer = 0;
    double y = 0.0;
    double y2 = 0.0;
    std::vector<double> z;
    std::vector<double> z2;
    std::vector<double> v;
    std::vector<double> v2;
    double magnitude = 0.0;
};

struct AssumptionCheck {
    std::string id;
    std::string description;
    bool passed = true;
    double max_violation = 0.0;
    std::optional<Witness> witness;  // first violation found (canonical probes come first)
    std::optional<Witness> worst;    // largest violation found
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;

    bool all_passed() const;
    const AssumptionCheck& get(const std::string& id) const;
};

struct SamplingBox {
    double y = 10.0;
    double z = 10.0;
    double v = 10.0;
};

/// Spot-checks the structural assumptions on random (y,z,v) tuples; failures are reported.
AssumptionReport check_assumptions(const ProblemData& data, const ScenarioTree& tree, std::size_t samples,
                                   std::uint64_t seed, const SamplingBox& box = {});

}  // namespace grbsde
