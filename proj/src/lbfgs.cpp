#include "kdv/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "kdv/error.hpp"

namespace kdv::optim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct TrialPoint {
  double t = 0.0;
  double f = 0.0;
  double gtd = 0.0;
  Eigen::VectorXd g;
};

}  // namespace

void LbfgsConfig::validate() const {
  if (!(0.0 < c1 && c1 < c2 && c2 < 1.0)) {
    throw InvalidArgument("L-BFGS needs 0 < c1 < c2 < 1");
  }
  if (history < 1) throw InvalidArgument("L-BFGS history must be >= 1");
  if (max_iter < 0) throw InvalidArgument("max_iter must be >= 0");
  if (!(initial_step > 0.0)) throw InvalidArgument("initial step must be positive");
  if (max_line_search < 1) throw InvalidArgument("max_line_search must be >= 1");
}

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::grad_tol: return "grad_tol";
    case StopReason::step_tol: return "step_tol";
    case StopReason::max_iter: return "max_iter";
    case StopReason::line_search_failed: return "line_search_failed";
    case StopReason::hook: return "hook";
  }
  return "?";
}

bool History::push(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
  const double sy = s.dot(y);
  if (!(sy > 1e-10 * s.norm() * y.norm())) return false;
  if (static_cast<int>(pairs_.size()) == capacity_) pairs_.pop_front();
  pairs_.push_back({s, y, 1.0 / sy});
  return true;
}

Eigen::VectorXd History::direction(const Eigen::VectorXd& g) const {
  if (pairs_.empty()) return -g;
  Eigen::VectorXd q = g;
  std::vector<double> alpha(pairs_.size());
  for (std::size_t i = pairs_.size(); i-- > 0;) {
    const Pair& p = pairs_[i];
    alpha[i] = p.rho * p.s.dot(q);
    q -= alpha[i] * p.y;
  }
  const Pair& newest = pairs_.back();
  Eigen::VectorXd r = (newest.s.dot(newest.y) / newest.y.squaredNorm()) * q;
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const Pair& p = pairs_[i];
    const double beta = p.rho * p.y.dot(r);
    r += (alpha[i] - beta) * p.s;
  }
  return -r;
}

double cubic_interpolate(double x1, double f1, double g1, double x2, double f2, double g2,
                         double lo, double hi) {
  if (lo > hi) std::swap(lo, hi);
  const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
  const double d2_sq = d1 * d1 - g1 * g2;
  if (std::isfinite(d2_sq) && d2_sq >= 0.0) {
    const double d2 = std::sqrt(d2_sq);
    const double xmin = x1 <= x2 ? x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
                                 : x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2));
    if (std::isfinite(xmin)) return std::clamp(xmin, lo, hi);
  }
  return 0.5 * (lo + hi);
}

Eigen::VectorXd trial_point(const Eigen::VectorXd& x, double t, const Eigen::VectorXd& dir) {
  return x + t * dir;
}

LineSearchResult strong_wolfe_search(const Closure& fn, const Eigen::VectorXd& x, double f0,
                                     const Eigen::VectorXd& g0, const Eigen::VectorXd& dir,
                                     double step, const LbfgsConfig& cfg) {
  LineSearchResult out;
  const double gtd0 = g0.dot(dir);
  const double dmax = dir.cwiseAbs().maxCoeff();

  auto eval = [&](double t) {
    TrialPoint p;
    p.t = t;
    p.g.resize(x.size());
    ++out.evaluations;
    try {
      p.f = fn(trial_point(x, t, dir), p.g);
    } catch (const NonFiniteError&) {
      p.f = kInf;
    }
    if (!std::isfinite(p.f) || !p.g.allFinite()) {
      p.f = kInf;
      p.gtd = kInf;
    } else {
      p.gtd = p.g.dot(dir);
    }
    return p;
  };
  auto armijo_fails = [&](const TrialPoint& p) { return p.f > f0 + cfg.c1 * p.t * gtd0; };
  auto curvature_ok = [&](const TrialPoint& p) { return std::abs(p.gtd) <= -cfg.c2 * gtd0; };

  TrialPoint cur = eval(step);
  for (int k = 0; !std::isfinite(cur.f) && k < cfg.max_shrinks; ++k) cur = eval(cur.t * 0.5);
  if (!std::isfinite(cur.f)) {
    out.step = 0.0;
    out.f = f0;
    out.grad = g0;
    return out;
  }

  TrialPoint prev{0.0, f0, gtd0, g0};
  std::array<TrialPoint, 2> bracket;
  bool done = false;
  bool bracketed = false;
  int iters = 0;

  while (iters < cfg.max_line_search) {
    if (armijo_fails(cur) || (iters > 1 && cur.f >= prev.f)) {
      bracket = {prev, cur};
      bracketed = true;
      break;
    }
    if (curvature_ok(cur)) {
      bracket = {cur, cur};
      done = true;
      break;
    }
    if (cur.gtd >= 0.0) {
      bracket = {prev, cur};
      bracketed = true;
      break;
    }
    const double lo = cur.t + 0.01 * (cur.t - prev.t);
    const double hi = cur.t * 10.0;
    const double next = cubic_interpolate(prev.t, prev.f, prev.gtd, cur.t, cur.f, cur.gtd, lo, hi);
    prev = std::move(cur);
    cur = eval(next);
    ++iters;
  }
  if (!done && !bracketed) bracket = {prev, cur};

  // Zoom: bracket[low] always holds the lowest Armijo-satisfying point.
  bool insufficient_progress = false;
  std::size_t low = bracket[0].f <= bracket[1].f ? 0 : 1;
  std::size_t high = 1 - low;
  while (!done && iters < cfg.max_line_search) {
    if (std::abs(bracket[1].t - bracket[0].t) * dmax < cfg.step_tol) break;
    const double a = std::min(bracket[0].t, bracket[1].t);
    const double b = std::max(bracket[0].t, bracket[1].t);
    double t = cubic_interpolate(bracket[0].t, bracket[0].f, bracket[0].gtd, bracket[1].t,
                                 bracket[1].f, bracket[1].gtd, a, b);
    const double eps = 0.1 * (b - a);
    if (std::min(b - t, t - a) < eps) {
      if (insufficient_progress || t >= b || t <= a) {
        t = std::abs(t - b) < std::abs(t - a) ? b - eps : a + eps;
        insufficient_progress = false;
      } else {
        insufficient_progress = true;
      }
    } else {
      insufficient_progress = false;
    }

    TrialPoint p = eval(t);
    ++iters;
    if (armijo_fails(p) || p.f >= bracket[low].f) {
      bracket[high] = std::move(p);
      low = bracket[0].f <= bracket[1].f ? 0 : 1;
      high = 1 - low;
    } else {
      if (curvature_ok(p)) {
        done = true;
      } else if (p.gtd * (bracket[high].t - bracket[low].t) >= 0.0) {
        bracket[high] = bracket[low];
      }
      bracket[low] = std::move(p);
    }
  }

  TrialPoint& best = bracket[low];
  if (!std::isfinite(best.f)) {
    out.step = 0.0;
    out.f = f0;
    out.grad = g0;
    return out;
  }
  out.step = best.t;
  out.f = best.f;
  out.grad = std::move(best.g);
  out.strong_wolfe = done && best.t > 0.0;
  return out;
}

Result minimize(const Closure& fn, Eigen::VectorXd x0, const LbfgsConfig& cfg,
                const Hook& hook) {
  cfg.validate();
  Result res;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd g(x.size());
  if (!x.allFinite()) throw InvalidArgument("initial point is not finite");
  double f = fn(x, g);
  res.evaluations = 1;
  if (!std::isfinite(f) || !g.allFinite()) {
    throw NonFiniteError("objective is not finite at the initial point", -1);
  }

  Eigen::VectorXd best_x = x;
  double best_f = f;
  History hist(cfg.history);

  auto finish = [&](StopReason reason, std::string msg) {
    res.x = best_x;
    res.f = best_f;
    res.reason = reason;
    res.message = std::move(msg);
    return res;
  };

  if (g.cwiseAbs().maxCoeff() <= cfg.grad_tol) {
    return finish(StopReason::grad_tol, "gradient below tolerance at the initial point");
  }

  for (int k = 1; k <= cfg.max_iter; ++k) {
    Eigen::VectorXd dir = hist.direction(g);
    if (!(g.dot(dir) < 0.0)) {
      hist.clear();
      dir = -g;
    }

    auto first_step = [&]() { return std::min(1.0, 1.0 / g.lpNorm<1>()) * cfg.initial_step; };
    LineSearchResult ls =
        strong_wolfe_search(fn, x, f, g, dir, hist.empty() ? first_step() : cfg.initial_step, cfg);
    res.evaluations += ls.evaluations;
    if (!ls.strong_wolfe && !hist.empty()) {
      // Retry once along steepest descent with a fresh model.
      hist.clear();
      dir = -g;
      ls = strong_wolfe_search(fn, x, f, g, dir, first_step(), cfg);
      res.evaluations += ls.evaluations;
    }
    if (!ls.strong_wolfe) {
      res.iterations = k - 1;
      return finish(StopReason::line_search_failed,
                    "line search found no strong-Wolfe step at iteration " + std::to_string(k));
    }

    // The accepted point is rebuilt exactly as the line search evaluated it,
    // so f and g belong to x bit for bit.
    Eigen::VectorXd x_new = trial_point(x, ls.step, dir);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = ls.grad - g;
    if (cfg.check_wolfe) {
      const double gtd0 = g.dot(dir);
      const double gtd = ls.grad.dot(dir);
      if (!(ls.f <= f + cfg.c1 * ls.step * gtd0) || !(std::abs(gtd) <= -cfg.c2 * gtd0)) {
        throw std::logic_error("accepted step violates the strong Wolfe conditions");
      }
    }
    const bool stored = hist.push(s, y);
    x = std::move(x_new);
    f = ls.f;
    g = ls.grad;
    if (f <= best_f) {
      best_f = f;
      best_x = x;
    }
    res.iterations = k;

    IterationInfo info{k, f, g.norm(), ls.step, res.evaluations, ls.strong_wolfe, !stored};
    res.trace.push_back(info);

    if (hook) {
      const HookAction act = hook(info, x);
      if (act.objective_changed) {
        f = fn(x, g);
        ++res.evaluations;
        if (!std::isfinite(f) || !g.allFinite()) {
          return finish(StopReason::hook, "objective became non-finite after update");
        }
        best_f = f;
        best_x = x;
      }
      if (act.stop) return finish(StopReason::hook, "stopped by hook");
    }

    if (g.cwiseAbs().maxCoeff() <= cfg.grad_tol) {
      return finish(StopReason::grad_tol, "gradient below tolerance");
    }
    if (s.cwiseAbs().maxCoeff() <= cfg.step_tol) {
      return finish(StopReason::step_tol, "step below tolerance");
    }
  }
  return finish(StopReason::max_iter, "iteration limit reached");
}

}  // namespace kdv::optim
