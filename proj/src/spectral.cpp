#include "kdv/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "kdv/csv.hpp"

namespace kdv::spectral {

namespace {

using cplx = std::complex<double>;
constexpr cplx kI{0.0, 1.0};

// RAII pair of 1-D real<->complex FFTW plans on owned buffers.
// FFTW's planner is not thread-safe; only fftw_execute is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    const std::lock_guard<std::mutex> lock(planner_mutex());
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    spec_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    const int ni = static_cast<int>(n);
    forward_ = fftw_plan_dft_r2c_1d(ni, real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(ni, spec_, real_, FFTW_ESTIMATE);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() {
    const std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  std::size_t modes() const noexcept { return n_ / 2 + 1; }

  void forward(std::span<const double> u, std::vector<cplx>& out) {
    std::copy(u.begin(), u.end(), real_);
    fftw_execute(forward_);
    out.resize(modes());
    std::memcpy(static_cast<void*>(out.data()), spec_, sizeof(fftw_complex) * modes());
  }

  // Normalized inverse: returns u with u_j = (1/n) sum_k c_k e^{2 pi i jk/n}.
  void inverse(const std::vector<cplx>& c, std::vector<double>& out) {
    std::memcpy(spec_, c.data(), sizeof(fftw_complex) * modes());
    fftw_execute(inverse_);
    out.resize(n_);
    const double s = 1.0 / static_cast<double>(n_);
    for (std::size_t j = 0; j < n_; ++j) out[j] = real_[j] * s;
  }

 private:
  std::size_t n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

std::vector<double> wavenumbers(const SpectralConfig& cfg) {
  const std::size_t m = cfg.n_modes / 2 + 1;
  std::vector<double> k(m);
  const double base = 2.0 * std::numbers::pi / (cfg.x_max - cfg.x_min);
  for (std::size_t j = 0; j < m; ++j) k[j] = base * static_cast<double>(j);
  return k;
}

struct EtdCoefficients {
  std::vector<cplx> e, e2, q, f1, f2, f3;
};

EtdCoefficients etd_coefficients(const std::vector<cplx>& lin, double h) {
  constexpr int kContour = 32;
  EtdCoefficients c;
  const std::size_t m = lin.size();
  for (auto* v : {&c.e, &c.e2, &c.q, &c.f1, &c.f2, &c.f3}) v->resize(m);
  std::array<cplx, kContour> roots;
  for (int r = 0; r < kContour; ++r) {
    roots[static_cast<std::size_t>(r)] =
        std::exp(kI * (2.0 * std::numbers::pi * (static_cast<double>(r) + 0.5) / static_cast<double>(kContour)));
  }
  for (std::size_t j = 0; j < m; ++j) {
    const cplx lh = lin[j] * h;
    c.e[j] = std::exp(lh);
    c.e2[j] = std::exp(0.5 * lh);
    cplx q{}, f1{}, f2{}, f3{};
    for (const cplx& root : roots) {
      const cplx z = lh + root;
      const cplx ez = std::exp(z);
      const cplx z3 = z * z * z;
      q += (std::exp(0.5 * z) - 1.0) / z;
      f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
      f2 += (2.0 + z + ez * (z - 2.0)) / z3;
      f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
    }
    const double w = h / kContour;
    c.q[j] = q * w;
    c.f1[j] = f1 * w;
    c.f2[j] = f2 * w;
    c.f3[j] = f3 * w;
  }
  return c;
}

class Integrator {
 public:
  Integrator(const physics::KdvParams& params, const SpectralConfig& cfg)
      : cfg_(cfg), fft_(cfg.n_modes), k_(wavenumbers(cfg)) {
    const std::size_t m = k_.size();
    lin_.resize(m);
    nonlin_.resize(m);
    mask_.assign(m, 1.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double k = k_[j];
      lin_[j] = kI * (params.mu * params.mu * k * k * k);
      nonlin_[j] = -0.5 * params.eta * kI * k;
      // 2/3 rule; the Nyquist mode carries no odd derivative in any case.
      if (cfg.dealias && 3 * j > cfg.n_modes) mask_[j] = 0.0;
      if (2 * j == cfg.n_modes) mask_[j] = 0.0;
    }
  }

  void project(std::vector<cplx>& v) const {
    for (std::size_t j = 0; j < v.size(); ++j) v[j] *= mask_[j];
  }

  void nonlinear(const std::vector<cplx>& v, std::vector<cplx>& out) {
    fft_.inverse(v, work_);
    double peak = 0.0;
    for (double& u : work_) {
      peak = std::max(peak, std::abs(u));
      u = u * u;
    }
    if (!(peak <= 1e6)) throw BlowUp("spectral solution blew up (|u| = " + std::to_string(peak) + ") at t = " + std::to_string(time_), time_);
    fft_.forward(work_, out);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= nonlin_[j] * mask_[j];
  }

  void step(std::vector<cplx>& v, const EtdCoefficients& c) {
    const std::size_t m = v.size();
    nonlinear(v, nv_);
    for (std::size_t j = 0; j < m; ++j) a_[j] = c.e2[j] * v[j] + c.q[j] * nv_[j];
    nonlinear(a_, na_);
    for (std::size_t j = 0; j < m; ++j) b_[j] = c.e2[j] * v[j] + c.q[j] * na_[j];
    nonlinear(b_, nb_);
    for (std::size_t j = 0; j < m; ++j) c_[j] = c.e2[j] * a_[j] + c.q[j] * (2.0 * nb_[j] - nv_[j]);
    nonlinear(c_, nc_);
    for (std::size_t j = 0; j < m; ++j) {
      v[j] = c.e[j] * v[j] + nv_[j] * c.f1[j] + 2.0 * (na_[j] + nb_[j]) * c.f2[j] + nc_[j] * c.f3[j];
    }
  }

  const EtdCoefficients& coefficients(double h) {
    auto it = coeffs_.find(h);
    if (it == coeffs_.end()) it = coeffs_.emplace(h, etd_coefficients(lin_, h)).first;
    return it->second;
  }

  void advance(std::vector<cplx>& v, double from, double to) {
    const double span = to - from;
    const auto n = static_cast<long>(std::floor(span / cfg_.dt + 1e-9));
    const EtdCoefficients& full = coefficients(cfg_.dt);
    for (long s = 0; s < n; ++s) {
      time_ = from + static_cast<double>(s) * cfg_.dt;
      step(v, full);
    }
    const double rest = span - static_cast<double>(n) * cfg_.dt;
    if (rest > 1e-12 * std::max(1.0, std::abs(to))) {
      time_ = to - rest;
      step(v, coefficients(rest));
    }
    time_ = to;
  }

  RealFft& fft() { return fft_; }

 private:
  SpectralConfig cfg_;
  RealFft fft_;
  std::vector<double> k_;
  std::vector<cplx> lin_, nonlin_;
  std::vector<double> mask_;
  std::map<double, EtdCoefficients> coeffs_;
  std::vector<double> work_;
  std::vector<cplx> nv_, na_, nb_, nc_;
  std::vector<cplx> a_ = std::vector<cplx>(k_.size()), b_ = std::vector<cplx>(k_.size()),
                    c_ = std::vector<cplx>(k_.size());
  double time_ = 0.0;
};

}  // namespace

void SpectralConfig::validate() const {
  if (n_modes < 32 || (n_modes & (n_modes - 1)) != 0) {
    throw InvalidArgument("n_modes must be a power of two >= 32");
  }
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(x_min < x_max)) throw InvalidArgument("degenerate periodic interval");
}

Solution solve(const std::function<double(double)>& ic, const physics::KdvParams& params,
               const SpectralConfig& cfg, std::span<const double> t_samples) {
  cfg.validate();
  for (std::size_t i = 0; i < t_samples.size(); ++i) {
    if (t_samples[i] < 0.0 || (i > 0 && t_samples[i] < t_samples[i - 1])) {
      throw InvalidArgument("sample times must be ascending and non-negative");
    }
  }
  Integrator integ(params, cfg);
  const std::size_t n = cfg.n_modes;
  const double h = (cfg.x_max - cfg.x_min) / static_cast<double>(n);
  std::vector<double> u(n);
  for (std::size_t j = 0; j < n; ++j) u[j] = ic(cfg.x_min + static_cast<double>(j) * h);

  std::vector<cplx> v;
  integ.fft().forward(u, v);
  integ.project(v);

  std::vector<Snapshot> snaps;
  double now = 0.0;
  for (double ts : t_samples) {
    if (ts > now) integ.advance(v, now, ts);
    now = std::max(now, ts);
    Snapshot s;
    s.t = ts;
    integ.fft().inverse(v, s.u);
    for (double x : s.u) {
      if (!std::isfinite(x) || std::abs(x) > 1e6) {
        throw BlowUp("spectral solution blew up before t = " + std::to_string(ts), ts);
      }
    }
    snaps.push_back(std::move(s));
  }
  return Solution(cfg, params, std::move(snaps));
}

Solution::Solution(SpectralConfig cfg, physics::KdvParams params, std::vector<Snapshot> snaps)
    : cfg_(cfg), params_(params), snaps_(std::move(snaps)) {}

double Solution::spacing() const noexcept {
  return (cfg_.x_max - cfg_.x_min) / static_cast<double>(cfg_.n_modes);
}

std::vector<double> Solution::grid() const {
  std::vector<double> x(cfg_.n_modes);
  for (std::size_t j = 0; j < x.size(); ++j) x[j] = cfg_.x_min + static_cast<double>(j) * spacing();
  return x;
}

const std::vector<cplx>& Solution::spectrum(std::size_t i) const {
  auto it = spectra_.find(i);
  if (it == spectra_.end()) {
    RealFft fft(cfg_.n_modes);
    std::vector<cplx> c;
    fft.forward(snaps_.at(i).u, c);
    it = spectra_.emplace(i, std::move(c)).first;
  }
  return it->second;
}

double Solution::evaluate(std::size_t i, double x) const {
  const auto& c = spectrum(i);
  const double n = static_cast<double>(cfg_.n_modes);
  const double base = 2.0 * std::numbers::pi / (cfg_.x_max - cfg_.x_min);
  const double phase = base * (x - cfg_.x_min);
  double sum = c[0].real();
  const std::size_t nyq = cfg_.n_modes / 2;
  for (std::size_t j = 1; j < nyq; ++j) {
    const cplx e = std::polar(1.0, phase * static_cast<double>(j));
    sum += 2.0 * (c[j] * e).real();
  }
  sum += (c[nyq] * std::cos(phase * static_cast<double>(nyq))).real();
  return sum / n;
}

std::vector<double> Solution::evaluate(std::size_t i, std::span<const double> xs) const {
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(evaluate(i, x));
  return out;
}

double Solution::evaluate_dx(std::size_t i, double x) const {
  const auto& c = spectrum(i);
  const double n = static_cast<double>(cfg_.n_modes);
  const double base = 2.0 * std::numbers::pi / (cfg_.x_max - cfg_.x_min);
  const double phase = base * (x - cfg_.x_min);
  double sum = 0.0;
  for (std::size_t j = 1; j < cfg_.n_modes / 2; ++j) {
    const double k = base * static_cast<double>(j);
    const cplx e = std::polar(1.0, phase * static_cast<double>(j));
    sum += 2.0 * (c[j] * kI * k * e).real();
  }
  return sum / n;
}

double Solution::mass(std::size_t i) const {
  double s = 0.0;
  for (double u : snaps_.at(i).u) s += u;
  return s * spacing();
}

double Solution::energy(std::size_t i) const {
  const auto& c = spectrum(i);
  std::vector<cplx> cx(c.size());
  const double base = 2.0 * std::numbers::pi / (cfg_.x_max - cfg_.x_min);
  for (std::size_t j = 0; j < c.size(); ++j) {
    const bool nyquist = 2 * j == cfg_.n_modes;
    cx[j] = nyquist ? cplx{} : c[j] * kI * (base * static_cast<double>(j));
  }
  RealFft fft(cfg_.n_modes);
  std::vector<double> ux;
  fft.inverse(cx, ux);
  const auto& u = snaps_.at(i).u;
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += physics::energy_density(u[j], ux[j], params_);
  return s * spacing();
}

std::size_t Solution::index_of(double t) const {
  for (std::size_t i = 0; i < snaps_.size(); ++i) {
    if (std::abs(snaps_[i].t - t) <= 1e-12 * std::max(1.0, std::abs(t))) return i;
  }
  throw InvalidArgument("no snapshot at t = " + std::to_string(t));
}

void write_snapshots_csv(const Solution& sol, const std::filesystem::path& path) {
  csv::Writer out(path, {"t", "x", "u"});
  const auto x = sol.grid();
  for (const auto& s : sol.snapshots()) {
    for (std::size_t j = 0; j < x.size(); ++j) out.row(s.t, x[j], s.u[j]);
  }
}

}  // namespace kdv::spectral
