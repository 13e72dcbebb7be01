#pragma once

// Training runs, post-training evaluation against reference solutions, and
// the tabular artifacts (trace, invariants, profiles, contour, tables).

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kdv/config.hpp"
#include "kdv/jet.hpp"
#include "kdv/lbfgs.hpp"
#include "kdv/network.hpp"
#include "kdv/physics.hpp"
#include "kdv/spectral.hpp"

namespace kdv::experiments {

namespace fs = std::filesystem;

/// Times tabulated in the ablation tables.
inline constexpr double kTableTimes[] = {0.0, 0.05, 0.1, 0.6, 0.8, 1.0, 1.4,
                                         1.8, 2.0, 2.2, 2.4, 2.6, 2.8, 3.0};

/// Table times that lie inside [0, t_max].
std::vector<double> table_times(double t_max);

/// Times of the profiles_<t>.csv files: 0, T/4, T/2, 3T/4, T.
std::vector<double> profile_times(double t_max);

/// Evaluation grid: `times` ascending from 0, x nodes equispaced with endpoints.
struct EvalGrid {
  std::vector<double> times;
  physics::UniformGrid x;
};

EvalGrid make_grid(const physics::Domain& domain, std::size_t nt, std::size_t nx);

/// Reference solution of a case: the analytic soliton, the Hirota
/// two-soliton, or the spectral oracle (cosine). The oracle variant only
/// answers at the times it was built for.
class Reference {
 public:
  enum class Kind { analytic_soliton, hirota, spectral_oracle };

  /// `times` lists every time the caller will query (needed by the oracle).
  static Reference for_case(const physics::CaseSpec& spec, std::span<const double> times);

  Kind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept;

  double operator()(double t, double x) const;
  std::vector<double> slice(double t, std::span<const double> xs) const;
  /// u_x of the reference (closed form, or spectral derivative of the oracle).
  std::vector<double> slice_dx(double t, std::span<const double> xs) const;

 private:
  Kind kind_ = Kind::analytic_soliton;
  physics::CaseSpec spec_;
  std::shared_ptr<const spectral::Solution> oracle_;
};

/// Largest |Hirota - spectral oracle started from the Hirota profile| over
/// the given times, on the oracle grid restricted to the case domain. The
/// oracle runs on a periodic box twice as wide (1024 modes, dt 1e-4) so the
/// far tails never wrap around.
double hirota_oracle_discrepancy(const physics::CaseSpec& spec, std::span<const double> times);

/// One row of an invariant series.
struct InvariantRow {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double error = 0.0;  // max over x of |u - u_ref|
};
using InvariantSeries = std::vector<InvariantRow>;

/// Batched field evaluation: writes u and u_x at the points.
using FieldFn = std::function<void(std::span<const nn::Point> pts, std::vector<double>& u,
                                   std::vector<double>& ux)>;

FieldFn field_of(const nn::Mlp& net);

/// Trapezoid mass/energy per time and max-abs error against the reference.
InvariantSeries invariant_series(const FieldFn& field, const physics::CaseSpec& spec,
                                 const Reference& ref, const EvalGrid& grid);
InvariantSeries invariant_series(const nn::Mlp& net, const physics::CaseSpec& spec,
                                 const Reference& ref, const EvalGrid& grid);

/// |pred - ref|_2 / |ref|_2. Throws on shape mismatch or zero reference.
double l2_relative_error(std::span<const double> pred, std::span<const double> ref);

/// Network and reference along x at one time (profiles_<t>.csv).
struct Profile {
  double t = 0.0;
  std::vector<double> u_pred;
  std::vector<double> u_ref;
};

/// Everything derived from a trained network; a pure function of
/// (network, config), so re-evaluation from a checkpoint reproduces it.
struct Evaluation {
  EvalGrid grid;                  // contour / invariants grid
  InvariantSeries series;         // one row per grid time
  InvariantSeries table;          // rows at table_times(t_max)
  std::vector<double> u_pred;     // contour values, row-major (t, x)
  std::vector<double> u_ref;
  std::vector<Profile> profiles;  // at profile_times(t_max), same x nodes
  double l2_relative = 0.0;       // over the whole contour grid
  double max_abs_error = 0.0;
  double ref_mass0 = 0.0;         // reference invariants at t = 0
  double ref_energy0 = 0.0;
  double max_mass_drift = 0.0;    // max_t |M(t) - M(0)| (network)
  double max_energy_drift = 0.0;
  double max_mass_deviation = 0.0;    // max_t |M(t) - M_ref(0)|
  double max_energy_deviation = 0.0;  // max_t |E(t) - E_ref(0)|
  std::string reference;
  std::optional<double> reference_check;  // Hirota vs oracle (two-soliton only)
};

Evaluation evaluate(const nn::Mlp& net, const config::RunConfig& cfg);

/// Optimizer outcome plus bookkeeping.
struct TrainOutcome {
  nn::Mlp net;
  optim::Result result;
  double wall_seconds = 0.0;
  std::string failure;  // non-empty when the run counts as failed
};

/// One row of trace.csv.
struct TraceRow {
  int iteration = 0;
  loss::LossValues loss;
  double grad_norm = 0.0;
  double step = 0.0;
  double wall_s = 0.0;
};

using TraceSink = std::function<void(const TraceRow&)>;

/// Builds the point set and network from `cfg` and runs L-BFGS, refreshing
/// the invariant weights every `weight_period` iterations (SP mode).
TrainOutcome train(const config::RunConfig& cfg, const TraceSink& sink = {});

struct RunArtifacts {
  fs::path dir;
  fs::path checkpoint, trace, invariants, contour, summary, table_csv, table_txt, points;
  std::vector<fs::path> profiles;
  config::RunConfig config;
  Evaluation evaluation;
  std::string stop_reason;
  bool ok = false;
  std::string failure;
};

/// Trains, evaluates and writes every artifact under `dir`.
RunArtifacts run_case(const config::RunConfig& cfg, const fs::path& dir);

/// Re-derives the evaluation artifacts (table.csv, table.txt and the summary
/// metrics) of a finished run from its checkpoint and stored config, writing
/// them under `out_dir`.
RunArtifacts rederive(const fs::path& run_dir, const fs::path& out_dir);

/// Reads the config echoed in a run's summary.json.
config::RunConfig load_run_config(const fs::path& run_dir);

// -- Tables ------------------------------------------------------------------

void write_series_csv(const InvariantSeries& s, const fs::path& path);
InvariantSeries read_series_csv(const fs::path& path);

/// Aligned text rendering of a single-run table.
std::string render_series(const InvariantSeries& s, std::string_view title);

struct AblationRow {
  double t = 0.0;
  InvariantRow sp;
  InvariantRow vanilla;
};

struct AblationTable {
  std::string case_name;
  std::string activation = "sine";
  double lr = 0.0;
  std::vector<AblationRow> rows;
};

/// Joins the rows of two runs of the same case (one per mode) at `times`.
/// Throws InvalidArgument when the modes are not SP and vanilla, the cases
/// differ, or a requested time is missing from either run.
AblationTable ablation_table(const RunArtifacts& sp, const RunArtifacts& vanilla,
                             std::span<const double> times);

void write_ablation_csv(const AblationTable& t, const fs::path& path);
AblationTable read_ablation_csv(const fs::path& path);

/// Aligned text (Time | Mass Energy Error | Mass Energy Error).
std::string render_ablation(const AblationTable& t);

/// Parses render_ablation output back into numbers (printed precision).
AblationTable parse_ablation_text(std::string_view text);

std::string format_time_tag(double t);

}  // namespace kdv::experiments
