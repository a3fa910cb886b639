#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace grbsde {

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

/// Strictly increasing instants t_0 = 0 < ... < t_K = T.
class TimeGrid {
public:
    TimeGrid() = default;
    explicit TimeGrid(std::vector<double> instants);

    static TimeGrid uniform(std::size_t steps, double horizon);

    std::size_t steps() const noexcept { return instants_.empty() ? 0 : instants_.size() - 1; }
    double horizon() const { return instants_.back(); }
    double time(std::size_t k) const { return instants_.at(k); }
    double step(std::size_t k) const { return instants_.at(k + 1) - instants_.at(k); }
    const std::vector<double>& instants() const noexcept { return instants_; }

private:
    std::vector<double> instants_;
};

struct Mark {
    std::string label;
    double value = 1.0;
    double weight = 0.0;  // q_j = Q(e_j) * eta, arrivals per unit time
};

/// Increment of the driving noises along one edge of the tree.
struct BranchIncrement {
    double prob = 1.0;
    std::vector<double> dB;     // Brownian surrogate, one entry per dimension
    std::vector<double> dN;     // compensated mark counts
    std::vector<int> arrivals;  // raw 0/1 arrivals per mark
    double dm = 0.0;            // extra orthogonal factor
};

/**
 * Rule producing the increment of the increasing process A over (t_k, t_{k+1}].
 *
 * deterministic: dA_k = increments[k] on every node of layer k.
 * mark_driven:   dA_k(u) = rate * Delta_k + sum_j jump_weights[j] * arrivals_j(edge into u).
 *
 * Either way dA_k is known at t_k.
 */
struct ASchedule {
    enum class Kind { deterministic, mark_driven };
    Kind kind = Kind::deterministic;
    std::vector<double> increments;
    double rate = 0.0;
    std::vector<double> jump_weights;
};

struct TreeConfig {
    TimeGrid grid;
    std::size_t brownian_dims = 0;
    std::vector<Mark> marks;
    bool extra_factor = false;
    ASchedule a_schedule;
    std::size_t max_nodes = 5'000'000;
};

struct TreeNode {
    std::size_t layer = 0;
    std::size_t parent = npos;
    std::size_t first_child = npos;
    std::size_t branch = npos;  // index of the incoming edge in the parent's branch law
    double prob = 1.0;          // unconditional probability of reaching the node
    double a = 0.0;             // A_{t_k}
    double da = 0.0;            // A-increment over (t_k, t_{k+1}]; 0 on leaves
    std::vector<double> w;      // cumulative Brownian surrogate
    std::vector<int> counts;    // cumulative arrivals per mark
    double x = 0.0;             // cumulative extra factor
};

/// Finite filtered probability space. Immutable after construction.
class ScenarioTree {
public:
    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t steps() const noexcept { return grid_.steps(); }
    std::size_t brownian_dims() const noexcept { return dims_; }
    std::size_t mark_count() const noexcept { return marks_.size(); }
    const std::vector<Mark>& marks() const noexcept { return marks_; }
    bool has_extra_factor() const noexcept { return extra_; }
    std::size_t branching() const noexcept { return branching_; }

    std::size_t size() const noexcept { return nodes_.size(); }
    const TreeNode& node(std::size_t id) const { return nodes_.at(id); }
    std::size_t layer_begin(std::size_t k) const { return layer_offsets_.at(k); }
    std::size_t layer_end(std::size_t k) const { return layer_offsets_.at(k + 1); }
    std::size_t layer_size(std::size_t k) const { return layer_end(k) - layer_begin(k); }
    bool is_leaf(std::size_t id) const { return nodes_.at(id).layer == steps(); }

    /// Branch law of the step leaving layer k (identical for every node of the layer).
    const std::vector<BranchIncrement>& law(std::size_t k) const { return laws_.at(k); }
    const BranchIncrement& edge(std::size_t child) const;

    double time_of(std::size_t id) const { return grid_.time(node(id).layer); }
    double step_of(std::size_t id) const { return grid_.step(node(id).layer); }
    double mark_weight(std::size_t j) const { return marks_.at(j).weight; }

private:
    friend ScenarioTree build_tree(const TreeConfig& cfg);

    TimeGrid grid_;
    std::size_t dims_ = 0;
    std::vector<Mark> marks_;
    bool extra_ = false;
    std::size_t branching_ = 1;
    std::vector<std::vector<BranchIncrement>> laws_;
    std::vector<TreeNode> nodes_;
    std::vector<std::size_t> layer_offsets_;
};

ScenarioTree build_tree(const TreeConfig& cfg);

/// Node-indexed real process; NaN marks an undefined entry.
class NodeValues {
public:
    NodeValues() = default;
    explicit NodeValues(std::size_t n, double fill = std::numeric_limits<double>::quiet_NaN())
        : values_(n, fill) {}
    explicit NodeValues(std::vector<double> values) : values_(std::move(values)) {}

    std::size_t size() const noexcept { return values_.size(); }
    double& operator[](std::size_t id) { return values_[id]; }
    double operator[](std::size_t id) const { return values_[id]; }
    bool defined(std::size_t id) const;
    bool defined_on_layer(const ScenarioTree& tree, std::size_t k) const;
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& raw() noexcept { return values_; }

private:
    std::vector<double> values_;
};

/// Per-node real vectors (Z in R^d, V per mark); empty where undefined.
using NodeVectors = std::vector<std::vector<double>>;

/// E[X | F_{t_k}] on every node of layer k. Other entries are NaN.
NodeValues conditional_expectation(const ScenarioTree& tree, const NodeValues& x, std::size_t k);

/// Sum_i p_i X(c_i) over the children of one node.
double expect_children(const ScenarioTree& tree, std::size_t node, const NodeValues& x);

struct MartingaleDecomposition {
    std::vector<double> z;         // one entry per Brownian dimension
    std::vector<double> v;         // one entry per mark
    std::vector<double> residual;  // orthogonal part, one entry per child
};

/**
 * Splits a centered child vector mu into its projections on the Brownian increments,
 * the compensated mark increments and an orthogonal residual:
 *   mu_i = z . dB_i + sum_j v_j dN_{j,i} + residual_i.
 * Throws not-a-martingale-increment when sum_i p_i mu_i != 0.
 */
MartingaleDecomposition martingale_decompose(const ScenarioTree& tree, std::size_t node,
                                             std::span<const double> mu);

}  // namespace grbsde
