#pragma once

// Recorded-graph reverse mode. A Graph is an append-only list of scalar nodes
// with local partial derivatives, plus "blocks": groups of leaves produced by a
// coarse-grained computation (e.g. a batched network pass) that know how to map
// their leaf adjoints back onto the parameter gradient.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "kdv/error.hpp"

namespace kdv::autodiff {

class Graph;

/// A scalar recorded on a Graph (or a plain constant when graph() is null).
class Var {
 public:
  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT: constants convert implicitly

  double value() const noexcept { return value_; }
  std::int64_t id() const noexcept { return id_; }
  Graph* graph() const noexcept { return graph_; }
  bool is_constant() const noexcept { return id_ < 0; }

 private:
  friend class Graph;
  Var(Graph* g, std::int64_t id, double value)
      : graph_(g), id_(id), value_(value) {}

  Graph* graph_ = nullptr;
  std::int64_t id_ = -1;
  double value_ = 0.0;
};

class Graph {
 public:
  /// Maps the adjoints of a block's leaves onto the flat parameter gradient.
  using BlockBackward = std::function<void(std::span<const double> leaf_adjoints,
                                           Eigen::Ref<Eigen::VectorXd> grad)>;

  explicit Graph(std::size_t parameter_count = 0);
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  std::size_t parameter_count() const noexcept { return n_params_; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Registers flat parameter `index` as a differentiable leaf.
  Var parameter(std::size_t index, double value);

  /// Appends a block of leaves and the rule that turns their adjoints into a
  /// parameter gradient contribution. Returns the leaves in order.
  std::vector<Var> add_block(std::span<const double> leaf_values,
                             BlockBackward backward);

  /// ∂loss/∂p for every registered parameter, flat order. Deterministic:
  /// nodes are visited in reverse recording order and blocks in
  /// registration order. Throws NonFiniteError naming the first non-finite
  /// node if any recorded value is NaN/inf.
  Eigen::VectorXd backward(const Var& loss) const;

  /// Adjoints of every node, for inspection in tests.
  std::vector<double> adjoints(const Var& loss) const;

  /// Throws NonFiniteError if any recorded node is non-finite.
  void check_finite() const;

  // Node recording; used by the free operators below.
  Var unary(const char* op, const Var& a, double value, double da);
  Var binary(const char* op, const Var& a, const Var& b, double value,
             double da, double db);

 private:
  struct Node {
    std::int64_t a = -1;
    std::int64_t b = -1;
    double da = 0.0;
    double db = 0.0;
    const char* op = "leaf";
  };
  struct Block {
    std::int64_t first = 0;
    std::int64_t count = 0;
    BlockBackward backward;
  };

  std::int64_t push(double value, Node node);

  std::size_t n_params_;
  std::vector<double> values_;
  std::vector<Node> nodes_;
  std::vector<std::pair<std::int64_t, std::size_t>> params_;
  std::vector<Block> blocks_;
  std::int64_t first_nonfinite_ = -1;
};

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var exp(const Var& a);
Var log(const Var& a);
Var sqrt(const Var& a);
Var square(const Var& a);

inline Var operator+(const Var& a, double b) { return a + Var(b); }
inline Var operator+(double a, const Var& b) { return Var(a) + b; }
inline Var operator-(const Var& a, double b) { return a - Var(b); }
inline Var operator-(double a, const Var& b) { return Var(a) - b; }
inline Var operator*(const Var& a, double b) { return a * Var(b); }
inline Var operator*(double a, const Var& b) { return Var(a) * b; }
inline Var operator/(const Var& a, double b) { return a / Var(b); }

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

/// Sequential left-to-right sum; checks finiteness eagerly.
Var sum(std::span<const Var> terms);

/// sum(terms) / terms.size(); the empty mean is an error.
Var mean(std::span<const Var> terms);

}  // namespace kdv::autodiff
