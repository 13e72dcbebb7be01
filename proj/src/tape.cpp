#include "kdv/tape.hpp"

#include <cmath>
#include <string>

namespace kdv::autodiff {

Graph::Graph(std::size_t parameter_count) : n_params_(parameter_count) {}

std::int64_t Graph::push(double value, Node node) {
  const auto id = static_cast<std::int64_t>(values_.size());
  if (first_nonfinite_ < 0 && !std::isfinite(value)) first_nonfinite_ = id;
  values_.push_back(value);
  nodes_.push_back(node);
  return id;
}

Var Graph::parameter(std::size_t index, double value) {
  if (index >= n_params_) {
    throw InvalidArgument("parameter index " + std::to_string(index) +
                          " out of range (graph has " +
                          std::to_string(n_params_) + ")");
  }
  const auto id = push(value, Node{.op = "parameter"});
  params_.emplace_back(id, index);
  return Var(this, id, value);
}

std::vector<Var> Graph::add_block(std::span<const double> leaf_values,
                                  BlockBackward backward) {
  std::vector<Var> leaves;
  leaves.reserve(leaf_values.size());
  const auto first = static_cast<std::int64_t>(values_.size());
  for (double v : leaf_values) {
    leaves.push_back(Var(this, push(v, Node{.op = "block"}), v));
  }
  blocks_.push_back(Block{first, static_cast<std::int64_t>(leaf_values.size()),
                          std::move(backward)});
  return leaves;
}

Var Graph::unary(const char* op, const Var& a, double value, double da) {
  if (a.is_constant()) return Var(value);
  return Var(this, push(value, Node{a.id(), -1, da, 0.0, op}), value);
}

Var Graph::binary(const char* op, const Var& a, const Var& b, double value,
                  double da, double db) {
  Node n{.op = op};
  if (!a.is_constant()) {
    n.a = a.id();
    n.da = da;
  }
  if (!b.is_constant()) {
    n.b = b.id();
    n.db = db;
  }
  if (n.a < 0 && n.b < 0) return Var(value);
  return Var(this, push(value, n), value);
}

void Graph::check_finite() const {
  if (first_nonfinite_ >= 0) {
    const auto& n = nodes_[static_cast<std::size_t>(first_nonfinite_)];
    throw NonFiniteError("non-finite value " +
                             std::to_string(values_[first_nonfinite_]) +
                             " at node " + std::to_string(first_nonfinite_) +
                             " (op '" + n.op + "')",
                         first_nonfinite_);
  }
}

std::vector<double> Graph::adjoints(const Var& loss) const {
  check_finite();
  std::vector<double> adj(values_.size(), 0.0);
  if (loss.is_constant()) return adj;
  if (loss.graph() != this) throw InvalidArgument("loss recorded on another graph");
  adj[static_cast<std::size_t>(loss.id())] = 1.0;
  for (std::int64_t i = loss.id(); i >= 0; --i) {
    const double g = adj[static_cast<std::size_t>(i)];
    if (g == 0.0) continue;
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.a >= 0) adj[static_cast<std::size_t>(n.a)] += n.da * g;
    if (n.b >= 0) adj[static_cast<std::size_t>(n.b)] += n.db * g;
  }
  return adj;
}

Eigen::VectorXd Graph::backward(const Var& loss) const {
  const std::vector<double> adj = adjoints(loss);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params_));
  for (const auto& [node, index] : params_) {
    grad[static_cast<Eigen::Index>(index)] += adj[static_cast<std::size_t>(node)];
  }
  for (const Block& b : blocks_) {
    if (b.first > loss.id()) continue;  // recorded after the loss; no influence
    b.backward(std::span<const double>(adj.data() + b.first,
                                       static_cast<std::size_t>(b.count)),
               grad);
  }
  return grad;
}

namespace {

Graph* graph_of(const Var& a, const Var& b) {
  Graph* g = a.graph() ? a.graph() : b.graph();
  if (a.graph() && b.graph() && a.graph() != b.graph()) {
    throw InvalidArgument("operands recorded on different graphs");
  }
  return g;
}

}  // namespace

Var operator+(const Var& a, const Var& b) {
  Graph* g = graph_of(a, b);
  if (!g) return Var(a.value() + b.value());
  return g->binary("add", a, b, a.value() + b.value(), 1.0, 1.0);
}

Var operator-(const Var& a, const Var& b) {
  Graph* g = graph_of(a, b);
  if (!g) return Var(a.value() - b.value());
  return g->binary("sub", a, b, a.value() - b.value(), 1.0, -1.0);
}

Var operator*(const Var& a, const Var& b) {
  Graph* g = graph_of(a, b);
  if (!g) return Var(a.value() * b.value());
  return g->binary("mul", a, b, a.value() * b.value(), b.value(), a.value());
}

Var operator/(const Var& a, const Var& b) {
  Graph* g = graph_of(a, b);
  const double q = a.value() / b.value();
  if (!g) return Var(q);
  return g->binary("div", a, b, q, 1.0 / b.value(), -q / b.value());
}

Var operator-(const Var& a) {
  if (!a.graph()) return Var(-a.value());
  return a.graph()->unary("neg", a, -a.value(), -1.0);
}

Var sin(const Var& a) {
  if (!a.graph()) return Var(std::sin(a.value()));
  return a.graph()->unary("sin", a, std::sin(a.value()), std::cos(a.value()));
}

Var cos(const Var& a) {
  if (!a.graph()) return Var(std::cos(a.value()));
  return a.graph()->unary("cos", a, std::cos(a.value()), -std::sin(a.value()));
}

Var exp(const Var& a) {
  const double e = std::exp(a.value());
  if (!a.graph()) return Var(e);
  return a.graph()->unary("exp", a, e, e);
}

Var log(const Var& a) {
  if (!a.graph()) return Var(std::log(a.value()));
  return a.graph()->unary("log", a, std::log(a.value()), 1.0 / a.value());
}

Var sqrt(const Var& a) {
  const double r = std::sqrt(a.value());
  if (!a.graph()) return Var(r);
  return a.graph()->unary("sqrt", a, r, 0.5 / r);
}

Var square(const Var& a) {
  if (!a.graph()) return Var(a.value() * a.value());
  return a.graph()->unary("square", a, a.value() * a.value(), 2.0 * a.value());
}

Var sum(std::span<const Var> terms) {
  Var acc(0.0);
  for (const Var& t : terms) acc = acc + t;
  if (acc.graph()) acc.graph()->check_finite();
  return acc;
}

Var mean(std::span<const Var> terms) {
  if (terms.empty()) throw InvalidArgument("mean of an empty set");
  return sum(terms) / static_cast<double>(terms.size());
}

}  // namespace kdv::autodiff
