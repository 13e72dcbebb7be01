#pragma once

// Limited-memory BFGS with a strong-Wolfe cubic-interpolation line search.
// The objective is a closure returning f(x) and writing grad f(x).

#include <deque>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace kdv::optim {

struct LbfgsConfig {
  int max_iter = 3000;        // outer iterations
  int history = 50;           // stored (s, y) pairs
  double initial_step = 1.0;  // first trial step of each line search ("learning rate")
  double c1 = 1e-4;           // sufficient decrease
  double c2 = 0.9;            // curvature
  double grad_tol = 1e-9;     // stop when |g|_inf <= grad_tol
  double step_tol = 1e-12;    // stop when |s|_inf <= step_tol
  int max_line_search = 25;   // function evaluations per line search
  int max_shrinks = 20;       // halvings of a trial step that produced a non-finite value
  bool check_wolfe = false;   // re-verify strong Wolfe on every accepted step (throws)

  void validate() const;
};

/// Returns f(x) and fills grad. Non-finite values (or a thrown
/// kdv::NonFiniteError) are treated as a failed trial point.
using Closure = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct IterationInfo {
  int iteration = 0;
  double f = 0.0;
  double grad_norm = 0.0;  // Euclidean
  double step = 0.0;       // accepted line-search step length
  int evaluations = 0;     // closure calls so far
  bool wolfe = false;      // accepted step satisfies both strong-Wolfe conditions
  bool curvature_skipped = false;
};

struct HookAction {
  bool stop = false;
  /// The closure now computes a different function (e.g. new loss weights);
  /// the optimizer re-evaluates at the current point.
  bool objective_changed = false;
};

using Hook = std::function<HookAction(const IterationInfo&, const Eigen::VectorXd& x)>;

enum class StopReason { grad_tol, step_tol, max_iter, line_search_failed, hook };

std::string_view to_string(StopReason r);

struct Result {
  Eigen::VectorXd x;  // best point seen under the current objective
  double f = 0.0;
  StopReason reason = StopReason::max_iter;
  std::string message;
  int iterations = 0;
  int evaluations = 0;
  std::vector<IterationInfo> trace;
};

/// Curvature pairs and the two-loop recursion.
class History {
 public:
  explicit History(int capacity) : capacity_(capacity) {}

  /// Stores (s, y) unless s.y <= 1e-10 |s||y|; returns whether it was stored.
  bool push(const Eigen::VectorXd& s, const Eigen::VectorXd& y);
  void clear() { pairs_.clear(); }
  bool empty() const noexcept { return pairs_.empty(); }
  std::size_t size() const noexcept { return pairs_.size(); }

  /// -H g with H0 = (s'y / y'y) I from the newest pair; -g when empty.
  Eigen::VectorXd direction(const Eigen::VectorXd& g) const;

 private:
  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  int capacity_;
  std::deque<Pair> pairs_;
};

/// Minimizer of the cubic interpolating (x1, f1, g1) and (x2, f2, g2), clamped
/// to [lo, hi]; falls back to the midpoint of [lo, hi] when undefined.
double cubic_interpolate(double x1, double f1, double g1, double x2, double f2, double g2,
                         double lo, double hi);

/// x + t dir; the single place trial points are formed.
Eigen::VectorXd trial_point(const Eigen::VectorXd& x, double t, const Eigen::VectorXd& dir);

struct LineSearchResult {
  double step = 0.0;
  double f = 0.0;
  Eigen::VectorXd grad;
  int evaluations = 0;
  bool strong_wolfe = false;
};

/// Bracketing + zoom search along `dir` from `x` (f0, g0 given) starting at
/// trial step `step`.
LineSearchResult strong_wolfe_search(const Closure& fn, const Eigen::VectorXd& x, double f0,
                                     const Eigen::VectorXd& g0, const Eigen::VectorXd& dir,
                                     double step, const LbfgsConfig& cfg);

Result minimize(const Closure& fn, Eigen::VectorXd x0, const LbfgsConfig& cfg,
                const Hook& hook = {});

}  // namespace kdv::optim
