#include "kdv/network.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <random>
#include <string>

#include "kdv/error.hpp"

namespace kdv::nn {

namespace {

using Eigen::ArrayXXd;
using Eigen::Index;
using Eigen::MatrixXd;

enum Slot { kV = 0, kT = 1, kX = 2, kXX = 3, kXXX = 4 };
constexpr int kSlots = 5;

std::array<bool, kSlots> slots_for(Derivs d) {
  switch (d) {
    case Derivs::value: return {true, false, false, false, false};
    case Derivs::space1: return {true, false, true, false, false};
    case Derivs::space2: return {true, false, true, true, false};
    case Derivs::full: return {true, true, true, true, true};
  }
  return {true, true, true, true, true};
}

using SlotMats = std::array<MatrixXd, kSlots>;

// Cached forward state of one batched jet evaluation.
struct JetPass {
  std::array<bool, kSlots> on{};
  Index n = 0;
  std::vector<SlotMats> a;  // a[0] input jets (2 x n); a[l+1] output of hidden layer l
  std::vector<SlotMats> z;  // hidden pre-activations
  std::vector<std::array<ArrayXXd, 5>> d;  // activation derivatives d0..d4 at z_v
  SlotMats out;             // 1 x n per slot
};

void activation_derivs(Activation act, const ArrayXXd& z, std::array<ArrayXXd, 5>& d,
                       int max_order) {
  if (act == Activation::sine) {
    d[0] = z.sin();
    d[1] = z.cos();
    if (max_order >= 2) d[2] = -d[0];
    if (max_order >= 3) d[3] = -d[1];
    if (max_order >= 4) d[4] = d[0];
    return;
  }
  d[0] = z.tanh();
  d[1] = 1.0 - d[0].square();
  if (max_order >= 2) d[2] = -2.0 * d[0] * d[1];
  if (max_order >= 3) d[3] = -2.0 * (d[1].square() + d[0] * d[2]);
  if (max_order >= 4) d[4] = -2.0 * (3.0 * d[1] * d[2] + d[0] * d[3]);
}

// Highest activation derivative the backward pass needs for these slots.
int needed_order(const std::array<bool, kSlots>& on) {
  if (on[kXXX]) return 4;
  if (on[kXX]) return 3;
  if (on[kT] || on[kX]) return 2;
  return 1;
}

std::unique_ptr<JetPass> run_forward(const Mlp& net, std::span<const Point> points,
                                     Derivs derivs) {
  auto pass = std::make_unique<JetPass>();
  pass->on = slots_for(derivs);
  const auto& on = pass->on;
  const Index n = static_cast<Index>(points.size());
  pass->n = n;
  const int depth = net.depth();

  pass->a.resize(static_cast<std::size_t>(depth) + 1);
  pass->z.resize(static_cast<std::size_t>(depth));
  pass->d.resize(static_cast<std::size_t>(depth));

  SlotMats& in = pass->a[0];
  in[kV].resize(2, n);
  for (Index i = 0; i < n; ++i) {
    in[kV](0, i) = points[static_cast<std::size_t>(i)].t;
    in[kV](1, i) = points[static_cast<std::size_t>(i)].x;
  }
  if (on[kT]) {
    in[kT] = MatrixXd::Zero(2, n);
    in[kT].row(0).setOnes();
  }
  if (on[kX]) {
    in[kX] = MatrixXd::Zero(2, n);
    in[kX].row(1).setOnes();
  }
  if (on[kXX]) in[kXX] = MatrixXd::Zero(2, n);
  if (on[kXXX]) in[kXXX] = MatrixXd::Zero(2, n);

  const int order = needed_order(on);
  for (int l = 0; l < depth; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const Layer& layer = net.layers()[ul];
    const SlotMats& prev = pass->a[ul];
    SlotMats& z = pass->z[ul];
    for (int s = 0; s < kSlots; ++s) {
      if (!on[s]) continue;
      z[s].noalias() = layer.weight * prev[s];
    }
    z[kV].colwise() += layer.bias;

    auto& d = pass->d[ul];
    activation_derivs(net.activation(), z[kV].array(), d, order);

    SlotMats& a = pass->a[ul + 1];
    a[kV] = d[0].matrix();
    if (on[kT]) a[kT] = (d[1] * z[kT].array()).matrix();
    if (on[kX]) a[kX] = (d[1] * z[kX].array()).matrix();
    if (on[kXX]) {
      const auto zx = z[kX].array();
      a[kXX] = (d[2] * zx.square() + d[1] * z[kXX].array()).matrix();
    }
    if (on[kXXX]) {
      const auto zx = z[kX].array();
      a[kXXX] = (d[3] * zx.cube() + 3.0 * d[2] * zx * z[kXX].array() +
                 d[1] * z[kXXX].array())
                    .matrix();
    }
  }

  const Layer& last = net.layers().back();
  const SlotMats& h = pass->a.back();
  for (int s = 0; s < kSlots; ++s) {
    if (!on[s]) continue;
    pass->out[s].noalias() = last.weight * h[s];
  }
  pass->out[kV].array() += last.bias[0];
  return pass;
}

// Reverse pass: output-slot adjoints (1 x n each) -> flat parameter gradient.
void run_backward(const Mlp& net, const JetPass& pass, const SlotMats& out_bar,
                  Eigen::Ref<Eigen::VectorXd> grad) {
  const auto& on = pass.on;
  const int depth = net.depth();

  std::vector<Index> offsets(static_cast<std::size_t>(depth) + 1);
  Index off = 0;
  for (int l = 0; l <= depth; ++l) {
    offsets[static_cast<std::size_t>(l)] = off;
    const Layer& layer = net.layers()[static_cast<std::size_t>(l)];
    off += layer.weight.size() + layer.bias.size();
  }

  auto accumulate = [&](int l, const SlotMats& zbar, const SlotMats& prev) {
    const Layer& layer = net.layers()[static_cast<std::size_t>(l)];
    const Index o = offsets[static_cast<std::size_t>(l)];
    Eigen::Map<MatrixXd> gw(grad.data() + o, layer.weight.rows(), layer.weight.cols());
    for (int s = 0; s < kSlots; ++s) {
      if (!on[s]) continue;
      gw.noalias() += zbar[s] * prev[s].transpose();
    }
    grad.segment(o + layer.weight.size(), layer.bias.size()) += zbar[kV].rowwise().sum();
  };

  // Output layer (linear).
  SlotMats abar;
  {
    const Layer& last = net.layers().back();
    accumulate(depth, out_bar, pass.a.back());
    for (int s = 0; s < kSlots; ++s) {
      if (!on[s]) continue;
      abar[s].noalias() = last.weight.transpose() * out_bar[s];
    }
  }

  for (int l = depth - 1; l >= 0; --l) {
    const auto ul = static_cast<std::size_t>(l);
    const auto& d = pass.d[ul];
    const SlotMats& z = pass.z[ul];
    SlotMats zbar;

    ArrayXXd zv = d[1] * abar[kV].array();
    if (on[kT]) {
      zv += d[2] * z[kT].array() * abar[kT].array();
      zbar[kT] = (d[1] * abar[kT].array()).matrix();
    }
    if (on[kX]) {
      zv += d[2] * z[kX].array() * abar[kX].array();
      zbar[kX] = (d[1] * abar[kX].array()).matrix();
    }
    if (on[kXX]) {
      const auto zx = z[kX].array();
      const auto b = abar[kXX].array();
      zv += (d[3] * zx.square() + d[2] * z[kXX].array()) * b;
      zbar[kX].array() += 2.0 * d[2] * zx * b;
      zbar[kXX] = (d[1] * b).matrix();
    }
    if (on[kXXX]) {
      const auto zx = z[kX].array();
      const auto zxx = z[kXX].array();
      const auto b = abar[kXXX].array();
      zv += (d[4] * zx.cube() + 3.0 * d[3] * zx * zxx + d[2] * z[kXXX].array()) * b;
      zbar[kX].array() += 3.0 * (d[3] * zx.square() + d[2] * zxx) * b;
      zbar[kXX].array() += 3.0 * d[2] * zx * b;
      zbar[kXXX] = (d[1] * b).matrix();
    }
    zbar[kV] = zv.matrix();

    accumulate(l, zbar, pass.a[ul]);
    if (l > 0) {
      const Layer& layer = net.layers()[ul];
      for (int s = 0; s < kSlots; ++s) {
        if (!on[s]) continue;
        abar[s].noalias() = layer.weight.transpose() * zbar[s];
      }
    }
  }
}

void check_shape(int depth, int width) {
  if (depth < 1 || width < 1) {
    throw InvalidArgument("network needs depth >= 1 and width >= 1 (got depth " +
                          std::to_string(depth) + ", width " + std::to_string(width) + ")");
  }
}

constexpr char kMagic[8] = {'K', 'D', 'V', 'M', 'L', 'P', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

}  // namespace

Mlp::Mlp(int depth, int width, Activation activation)
    : depth_(depth), width_(width), activation_(activation) {
  check_shape(depth, width);
  n_params_ = parameter_count(depth, width);
  layers_.reserve(static_cast<std::size_t>(depth) + 1);
  int fan_in = 2;
  for (int l = 0; l < depth; ++l) {
    layers_.push_back({MatrixXd::Zero(width, fan_in), Eigen::VectorXd::Zero(width)});
    fan_in = width;
  }
  layers_.push_back({MatrixXd::Zero(1, width), Eigen::VectorXd::Zero(1)});
}

std::size_t Mlp::parameter_count(int depth, int width) {
  check_shape(depth, width);
  const auto w = static_cast<std::size_t>(width);
  return (2 * w + w) + static_cast<std::size_t>(depth - 1) * (w * w + w) + (w + 1);
}

std::string_view to_string(Init scheme) {
  return scheme == Init::pytorch ? "pytorch" : "sqrt6";
}

std::optional<Init> parse_init(std::string_view s) {
  if (s == "pytorch") return Init::pytorch;
  if (s == "sqrt6") return Init::sqrt6;
  return std::nullopt;
}

Mlp Mlp::init(std::uint64_t seed, int depth, int width, Activation activation, Init scheme) {
  Mlp net(depth, width, activation);
  net.seed_ = seed;
  std::mt19937_64 rng(seed);
  for (Layer& layer : net.layers_) {
    const double fan_in = static_cast<double>(layer.weight.cols());
    const double bound = scheme == Init::pytorch ? 1.0 / std::sqrt(fan_in) : std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> dist(-bound, bound);
    double* w = layer.weight.data();
    for (Index i = 0; i < layer.weight.size(); ++i) w[i] = dist(rng);
    if (scheme == Init::pytorch) {
      for (Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = dist(rng);
    }
  }
  return net;
}

Eigen::VectorXd Mlp::flatten() const {
  Eigen::VectorXd v(static_cast<Index>(n_params_));
  Index o = 0;
  for (const Layer& layer : layers_) {
    v.segment(o, layer.weight.size()) =
        Eigen::Map<const Eigen::VectorXd>(layer.weight.data(), layer.weight.size());
    o += layer.weight.size();
    v.segment(o, layer.bias.size()) = layer.bias;
    o += layer.bias.size();
  }
  return v;
}

void Mlp::unflatten(std::span<const double> params) {
  if (params.size() != n_params_) {
    throw InvalidArgument("parameter vector has " + std::to_string(params.size()) +
                          " entries, network expects " + std::to_string(n_params_));
  }
  std::size_t o = 0;
  for (Layer& layer : layers_) {
    std::memcpy(layer.weight.data(), params.data() + o,
                sizeof(double) * static_cast<std::size_t>(layer.weight.size()));
    o += static_cast<std::size_t>(layer.weight.size());
    std::memcpy(layer.bias.data(), params.data() + o,
                sizeof(double) * static_cast<std::size_t>(layer.bias.size()));
    o += static_cast<std::size_t>(layer.bias.size());
  }
}

std::vector<double> Mlp::forward(std::span<const Point> points) const {
  // Same code path as the jets so slot 0 agrees bit for bit.
  const auto pass = run_forward(*this, points, Derivs::value);
  const auto& out = pass->out[kV];
  return {out.data(), out.data() + out.size()};
}

double Mlp::forward(double t, double x) const {
  const Point p{t, x};
  return forward(std::span<const Point>(&p, 1))[0];
}

std::vector<Jet> Mlp::forward_jets(std::span<const Point> points, Derivs derivs) const {
  const auto pass = run_forward(*this, points, derivs);
  std::vector<Jet> jets(points.size());
  for (std::size_t i = 0; i < jets.size(); ++i) {
    const auto c = static_cast<Index>(i);
    Jet& j = jets[i];
    j.v = pass->out[kV](0, c);
    if (pass->on[kT]) j.vt = pass->out[kT](0, c);
    if (pass->on[kX]) j.vx = pass->out[kX](0, c);
    if (pass->on[kXX]) j.vxx = pass->out[kXX](0, c);
    if (pass->on[kXXX]) j.vxxx = pass->out[kXXX](0, c);
  }
  return jets;
}

Jet Mlp::forward_jet(double t, double x) const {
  const Point p{t, x};
  return forward_jets(std::span<const Point>(&p, 1), Derivs::full)[0];
}

std::vector<BasicJet<Var>> Mlp::forward_jets(autodiff::Graph& graph,
                                             std::span<const Point> points,
                                             Derivs derivs) const {
  if (graph.parameter_count() != n_params_) {
    throw InvalidArgument("graph parameter count " + std::to_string(graph.parameter_count()) +
                          " does not match network (" + std::to_string(n_params_) + ")");
  }
  std::shared_ptr<const JetPass> pass = run_forward(*this, points, derivs);
  const auto& on = pass->on;
  std::array<int, kSlots> active{};
  int n_active = 0;
  for (int s = 0; s < kSlots; ++s) {
    if (on[s]) active[static_cast<std::size_t>(n_active++)] = s;
  }

  const Index n = pass->n;
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n * n_active));
  for (Index i = 0; i < n; ++i) {
    for (int k = 0; k < n_active; ++k) values.push_back(pass->out[active[static_cast<std::size_t>(k)]](0, i));
  }

  // The block keeps its own copy of the weights so the graph stays valid if the
  // network is mutated afterwards.
  auto backward = [net = *this, pass, active, n_active](std::span<const double> adj,
                                                        Eigen::Ref<Eigen::VectorXd> grad) {
    SlotMats out_bar;
    const Index n = pass->n;
    bool any = false;
    for (int k = 0; k < n_active; ++k) {
      const int s = active[static_cast<std::size_t>(k)];
      out_bar[s].resize(1, n);
      for (Index i = 0; i < n; ++i) {
        const double g = adj[static_cast<std::size_t>(i * n_active + k)];
        out_bar[s](0, i) = g;
        any = any || g != 0.0;
      }
    }
    if (any) run_backward(net, *pass, out_bar, grad);
  };

  std::vector<Var> leaves = graph.add_block(values, std::move(backward));
  std::vector<BasicJet<Var>> jets(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    auto& j = jets[static_cast<std::size_t>(i)];
    for (int k = 0; k < n_active; ++k) {
      const Var& leaf = leaves[static_cast<std::size_t>(i * n_active + k)];
      switch (active[static_cast<std::size_t>(k)]) {
        case kV: j.v = leaf; break;
        case kT: j.vt = leaf; break;
        case kX: j.vx = leaf; break;
        case kXX: j.vxx = leaf; break;
        case kXXX: j.vxxx = leaf; break;
      }
    }
  }
  return jets;
}

void Mlp::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  auto put = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  out.write(kMagic, sizeof kMagic);
  put(static_cast<std::uint64_t>(depth_));
  put(static_cast<std::uint64_t>(width_));
  put(seed_);
  put(static_cast<std::uint64_t>(activation_));
  put(static_cast<std::uint64_t>(n_params_));
  const Eigen::VectorXd p = flatten();
  out.write(reinterpret_cast<const char*>(p.data()),
            static_cast<std::streamsize>(sizeof(double) * n_params_));
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

Mlp Mlp::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error("not a network checkpoint: " + path.string());
  }
  auto get = [&]() {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  };
  const auto depth = static_cast<int>(get());
  const auto width = static_cast<int>(get());
  const std::uint64_t seed = get();
  const auto act = get();
  const auto count = get();
  if (!in || act > 1) throw Error("corrupt checkpoint header: " + path.string());
  Mlp net(depth, width, static_cast<Activation>(act));
  net.seed_ = seed;
  if (count != net.n_params_) throw Error("checkpoint parameter count mismatch: " + path.string());
  std::vector<double> p(count);
  in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(sizeof(double) * count));
  if (!in) throw Error("truncated checkpoint: " + path.string());
  net.unflatten(p);
  return net;
}

}  // namespace kdv::nn
