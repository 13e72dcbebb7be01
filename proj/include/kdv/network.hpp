#pragma once

// Sinusoidal multilayer perceptron u_theta(t, x) with exact input jets and a
// batched reverse pass for parameter gradients.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "kdv/jet.hpp"
#include "kdv/tape.hpp"

namespace kdv::nn {

using autodiff::BasicJet;
using autodiff::Jet;
using autodiff::Var;

enum class Activation : std::uint8_t { sine = 0, tanh = 1 };

/// Which jet slots a batched pass computes. Higher x-derivatives imply the
/// lower ones.
enum class Derivs : std::uint8_t {
  value,   // u
  space1,  // u, u_x
  space2,  // u, u_x, u_xx
  full,    // u, u_t, u_x, u_xx, u_xxx
};

/// Initialization schemes. `pytorch` matches torch.nn.Linear's default
/// (weights and biases uniform on +-1/sqrt(fan_in)); `sqrt6` draws weights
/// uniform on +-sqrt(6/fan_in) with zero biases.
enum class Init : std::uint8_t { pytorch = 0, sqrt6 = 1 };

std::string_view to_string(Init scheme);
std::optional<Init> parse_init(std::string_view s);

struct Point {
  double t = 0.0;
  double x = 0.0;
};

/// One dense layer. `weight` is (fan_out x fan_in) column-major, which is
/// the same memory layout as a row-major (fan_in x fan_out) matrix.
struct Layer {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

class Mlp {
 public:
  /// Zero-initialized network with `depth` hidden layers of `width` neurons.
  Mlp(int depth, int width, Activation activation = Activation::sine);

  /// Random parameters per `scheme`, deterministic per seed.
  static Mlp init(std::uint64_t seed, int depth, int width,
                  Activation activation = Activation::sine, Init scheme = Init::pytorch);

  /// (2W + W) + (L-1)(W^2 + W) + (W + 1).
  static std::size_t parameter_count(int depth, int width);

  int depth() const noexcept { return depth_; }
  int width() const noexcept { return width_; }
  Activation activation() const noexcept { return activation_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t parameter_count() const noexcept { return n_params_; }

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  /// Layer by layer, weights row-major (fan_in x fan_out) then bias.
  Eigen::VectorXd flatten() const;
  void unflatten(std::span<const double> params);
  void unflatten(const Eigen::VectorXd& params) {
    unflatten(std::span<const double>(params.data(), static_cast<std::size_t>(params.size())));
  }

  double forward(double t, double x) const;
  std::vector<double> forward(std::span<const Point> points) const;

  Jet forward_jet(double t, double x) const;
  std::vector<Jet> forward_jets(std::span<const Point> points,
                                Derivs derivs = Derivs::full) const;

  /// Graph-valued jets: every computed slot is a leaf of one block on `graph`
  /// whose backward maps slot adjoints to the flat parameter gradient.
  /// Slots outside `derivs` are constant zero.
  std::vector<BasicJet<Var>> forward_jets(autodiff::Graph& graph,
                                          std::span<const Point> points,
                                          Derivs derivs = Derivs::full) const;

  void save(const std::filesystem::path& path) const;
  static Mlp load(const std::filesystem::path& path);

 private:
  int depth_;
  int width_;
  Activation activation_;
  std::uint64_t seed_ = 0;
  std::size_t n_params_;
  std::vector<Layer> layers_;
};

}  // namespace kdv::nn
