#include "kdv/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "kdv/csv.hpp"
#include "kdv/error.hpp"
#include "kdv/loss.hpp"
#include "kdv/sampling.hpp"

namespace kdv::experiments {

namespace {

using json = nlohmann::ordered_json;

constexpr double kTimeMatch = 1e-9;
constexpr double kHirotaCheckTol = 1e-5;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::vector<double> merged_times(std::initializer_list<std::span<const double>> lists) {
  std::vector<double> all;
  for (auto l : lists) all.insert(all.end(), l.begin(), l.end());
  std::sort(all.begin(), all.end());
  std::vector<double> out;
  for (double t : all) {
    if (out.empty() || t - out.back() > 1e-12) out.push_back(t);
  }
  return out;
}

std::vector<nn::Point> slice_points(double t, std::span<const double> xs) {
  std::vector<nn::Point> pts(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) pts[i] = {t, xs[i]};
  return pts;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json config_json(const config::RunConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : config::entries(cfg)) j[k] = v;
  return j;
}

json metrics_json(const Evaluation& ev) {
  json m = json::object();
  m["reference"] = ev.reference;
  m["l2_relative"] = ev.l2_relative;
  m["max_abs_error"] = ev.max_abs_error;
  m["ref_mass0"] = ev.ref_mass0;
  m["ref_energy0"] = ev.ref_energy0;
  m["max_mass_drift"] = ev.max_mass_drift;
  m["max_energy_drift"] = ev.max_energy_drift;
  m["max_mass_deviation"] = ev.max_mass_deviation;
  m["max_energy_deviation"] = ev.max_energy_deviation;
  m["reference_check"] = ev.reference_check ? json(*ev.reference_check) : json(nullptr);
  json rows = json::array();
  for (const auto& r : ev.table) {
    rows.push_back({{"t", r.t}, {"mass", r.mass}, {"energy", r.energy}, {"error", r.error}});
  }
  m["table"] = std::move(rows);
  return m;
}

std::string series_title(const config::RunConfig& cfg) {
  return std::string(physics::to_string(cfg.case_name)) + ", " +
         (cfg.mode == loss::Mode::structure_preserving ? "SP-PINN" : "Vanilla PINN") +
         ", learning rate = " + config::format_value(cfg.lr) + ", " +
         (cfg.activation == nn::Activation::sine ? "sine" : "tanh") + " activation";
}

void write_profiles(const Evaluation& ev, const fs::path& dir, std::vector<fs::path>& paths) {
  for (const auto& p : ev.profiles) {
    const auto path = dir / ("profiles_" + format_time_tag(p.t) + ".csv");
    csv::Writer w(path, {"x", "u_pred", "u_ref"});
    for (std::size_t i = 0; i < p.u_pred.size(); ++i) w.row(ev.grid.x.node(i), p.u_pred[i], p.u_ref[i]);
    paths.push_back(path);
  }
}

void write_contour(const Evaluation& ev, const fs::path& path) {
  csv::Writer w(path, {"t", "x", "u_pred", "u_ref", "abs_err"});
  const std::size_t nx = ev.grid.x.n;
  for (std::size_t i = 0; i < ev.grid.times.size(); ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      const std::size_t k = i * nx + j;
      w.row(ev.grid.times[i], ev.grid.x.node(j), ev.u_pred[k], ev.u_ref[k],
            std::abs(ev.u_pred[k] - ev.u_ref[k]));
    }
  }
}

// Evaluation artifacts shared by run_case and rederive.
void write_evaluation(const Evaluation& ev, const config::RunConfig& cfg, RunArtifacts& art) {
  art.invariants = art.dir / "invariants.csv";
  art.table_csv = art.dir / "table.csv";
  art.table_txt = art.dir / "table.txt";
  write_series_csv(ev.series, art.invariants);
  write_series_csv(ev.table, art.table_csv);
  write_text(art.table_txt, render_series(ev.table, series_title(cfg)));
  write_text(art.dir / "metrics.json", metrics_json(ev).dump(2) + "\n");
}

const InvariantRow& row_at(const InvariantSeries& s, double t, std::string_view who) {
  for (const auto& r : s) {
    if (std::abs(r.t - t) <= kTimeMatch) return r;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", t);
  throw InvalidArgument("time " + std::string(buf) + " missing from the " + std::string(who) +
                        " run");
}

}  // namespace

// -- Grids and references -----------------------------------------------------

std::vector<double> table_times(double t_max) {
  std::vector<double> out;
  for (double t : kTableTimes) {
    if (t <= t_max + 1e-12) out.push_back(t);
  }
  return out;
}

std::vector<double> profile_times(double t_max) {
  return {0.0, 0.25 * t_max, 0.5 * t_max, 0.75 * t_max, t_max};
}

EvalGrid make_grid(const physics::Domain& domain, std::size_t nt, std::size_t nx) {
  if (nt < 2 || nx < 2) throw InvalidArgument("evaluation grid needs >= 2 points per axis");
  domain.validate();
  return {sampling::linspace(0.0, domain.t_max, nt), {domain.x_min, domain.x_max, nx}};
}

Reference Reference::for_case(const physics::CaseSpec& spec, std::span<const double> times) {
  Reference r;
  r.spec_ = spec;
  switch (spec.name) {
    case physics::CaseName::one_soliton:
      r.kind_ = Kind::analytic_soliton;
      break;
    case physics::CaseName::two_soliton:
      r.kind_ = Kind::hirota;
      break;
    case physics::CaseName::cosine: {
      r.kind_ = Kind::spectral_oracle;
      spectral::SpectralConfig sc;
      sc.x_min = spec.domain.x_min;
      sc.x_max = spec.domain.x_max;
      const auto ts = merged_times({times});
      r.oracle_ = std::make_shared<const spectral::Solution>(spectral::solve(
          [&](double x) { return spec.initial(x); }, spec.params, sc, ts));
      break;
    }
  }
  return r;
}

std::string_view Reference::name() const noexcept {
  switch (kind_) {
    case Kind::analytic_soliton:
      return "analytic_soliton";
    case Kind::hirota:
      return "hirota";
    case Kind::spectral_oracle:
      return "spectral_oracle";
  }
  return "unknown";
}

double Reference::operator()(double t, double x) const {
  if (kind_ == Kind::spectral_oracle) return oracle_->evaluate(oracle_->index_of(t), x);
  return *spec_.exact(t, x);
}

std::vector<double> Reference::slice(double t, std::span<const double> xs) const {
  if (kind_ == Kind::spectral_oracle) return oracle_->evaluate(oracle_->index_of(t), xs);
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = *spec_.exact(t, xs[i]);
  return out;
}

std::vector<double> Reference::slice_dx(double t, std::span<const double> xs) const {
  std::vector<double> out(xs.size());
  if (kind_ == Kind::spectral_oracle) {
    const std::size_t i = oracle_->index_of(t);
    for (std::size_t k = 0; k < xs.size(); ++k) out[k] = oracle_->evaluate_dx(i, xs[k]);
    return out;
  }
  for (std::size_t k = 0; k < xs.size(); ++k) {
    out[k] = std::visit(
        Overloaded{
            [&](const physics::SolitonIc& s) {
              return physics::soliton_jet(t, xs[k], s.c, s.x0).vx;
            },
            [&](const physics::TwoSolitonIc& s) {
              return physics::hirota_two_soliton_jet(t, xs[k], s.c1, s.c2, s.x1, s.x2).vx;
            },
            [](const physics::CosineIc&) -> double {
              throw Error("cosine case has no closed-form reference");
            }},
        spec_.ic);
  }
  return out;
}

double hirota_oracle_discrepancy(const physics::CaseSpec& spec, std::span<const double> times) {
  const auto* ic = std::get_if<physics::TwoSolitonIc>(&spec.ic);
  if (ic == nullptr) throw InvalidArgument("hirota_oracle_discrepancy needs a two-soliton case");
  const double a = spec.domain.x_min;
  const double b = spec.domain.x_max;
  const double mid = 0.5 * (a + b);
  spectral::SpectralConfig sc;
  sc.n_modes = 1024;
  sc.x_min = mid - (b - a);
  sc.x_max = mid + (b - a);
  const auto ts = merged_times({times});
  const auto sol = spectral::solve(
      [&](double x) { return physics::hirota_two_soliton(0.0, x, ic->c1, ic->c2, ic->x1, ic->x2); },
      spec.params, sc, ts);
  const auto xs = sol.grid();
  double worst = 0.0;
  for (std::size_t i = 0; i < sol.snapshots().size(); ++i) {
    const auto& snap = sol.snapshots()[i];
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (xs[j] < a || xs[j] > b) continue;
      const double h =
          physics::hirota_two_soliton(snap.t, xs[j], ic->c1, ic->c2, ic->x1, ic->x2);
      worst = std::max(worst, std::abs(snap.u[j] - h));
    }
  }
  return worst;
}

// -- Invariants and errors ----------------------------------------------------

FieldFn field_of(const nn::Mlp& net) {
  return [&net](std::span<const nn::Point> pts, std::vector<double>& u, std::vector<double>& ux) {
    const auto jets = net.forward_jets(pts, nn::Derivs::space1);
    u.resize(jets.size());
    ux.resize(jets.size());
    for (std::size_t i = 0; i < jets.size(); ++i) {
      u[i] = jets[i].v;
      ux[i] = jets[i].vx;
    }
  };
}

InvariantSeries invariant_series(const FieldFn& field, const physics::CaseSpec& spec,
                                 const Reference& ref, const EvalGrid& grid) {
  grid.x.validate();
  const std::vector<double> xs = grid.x.nodes();
  InvariantSeries out;
  out.reserve(grid.times.size());
  std::vector<double> u, ux;
  for (double t : grid.times) {
    field(slice_points(t, xs), u, ux);
    const auto exact = ref.slice(t, xs);
    out.push_back({t, physics::mass(u, grid.x), physics::energy(u, ux, grid.x, spec.params),
                   max_abs_diff(u, exact)});
  }
  return out;
}

InvariantSeries invariant_series(const nn::Mlp& net, const physics::CaseSpec& spec,
                                 const Reference& ref, const EvalGrid& grid) {
  return invariant_series(field_of(net), spec, ref, grid);
}

double l2_relative_error(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size()) throw InvalidArgument("l2_relative_error: shape mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - ref[i];
    num += d * d;
    den += ref[i] * ref[i];
  }
  if (!(den > 0.0)) throw InvalidArgument("l2_relative_error: reference has zero norm");
  return std::sqrt(num / den);
}

Evaluation evaluate(const nn::Mlp& net, const config::RunConfig& cfg) {
  const physics::CaseSpec spec = cfg.case_spec();
  Evaluation ev;
  ev.grid = make_grid(spec.domain, cfg.eval_nt, cfg.eval_nx);
  const auto ttimes = table_times(spec.domain.t_max);
  const auto ptimes = profile_times(spec.domain.t_max);
  const auto all_times = merged_times({ev.grid.times, ttimes, ptimes});
  const Reference ref = Reference::for_case(spec, all_times);
  ev.reference = std::string(ref.name());

  const FieldFn field = field_of(net);
  ev.series = invariant_series(field, spec, ref, ev.grid);
  ev.table = invariant_series(field, spec, ref, EvalGrid{ttimes, ev.grid.x});

  const std::vector<double> xs = ev.grid.x.nodes();
  for (double t : ev.grid.times) {
    const auto pred = net.forward(slice_points(t, xs));
    const auto exact = ref.slice(t, xs);
    ev.u_pred.insert(ev.u_pred.end(), pred.begin(), pred.end());
    ev.u_ref.insert(ev.u_ref.end(), exact.begin(), exact.end());
  }
  for (double t : ptimes) ev.profiles.push_back({t, net.forward(slice_points(t, xs)), ref.slice(t, xs)});
  ev.l2_relative = l2_relative_error(ev.u_pred, ev.u_ref);
  ev.max_abs_error = max_abs_diff(ev.u_pred, ev.u_ref);

  const auto u0 = ref.slice(0.0, xs);
  const auto ux0 = ref.slice_dx(0.0, xs);
  ev.ref_mass0 = physics::mass(u0, ev.grid.x);
  ev.ref_energy0 = physics::energy(u0, ux0, ev.grid.x, spec.params);
  const InvariantRow& first = ev.series.front();
  for (const auto& r : ev.series) {
    ev.max_mass_drift = std::max(ev.max_mass_drift, std::abs(r.mass - first.mass));
    ev.max_energy_drift = std::max(ev.max_energy_drift, std::abs(r.energy - first.energy));
    ev.max_mass_deviation = std::max(ev.max_mass_deviation, std::abs(r.mass - ev.ref_mass0));
    ev.max_energy_deviation =
        std::max(ev.max_energy_deviation, std::abs(r.energy - ev.ref_energy0));
  }

  if (ref.kind() == Reference::Kind::hirota) {
    ev.reference_check = hirota_oracle_discrepancy(spec, merged_times({ttimes, ptimes}));
  }
  return ev;
}

// -- Training -----------------------------------------------------------------

TrainOutcome train(const config::RunConfig& cfg, const TraceSink& sink) {
  cfg.validate();
  const physics::CaseSpec spec = cfg.case_spec();
  nn::Mlp net = nn::Mlp::init(cfg.seed, cfg.resolved_depth(), cfg.width, cfg.activation, cfg.init);
  loss::Objective obj(net, sampling::build_trainset(spec.domain, cfg.seed, cfg.counts), spec,
                      cfg.weight_state());

  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  // Loss components of every evaluation since the last accepted iterate,
  // so trace rows reuse the line search's work.
  struct Seen {
    Eigen::VectorXd x;
    loss::LossValues values;
  };
  std::vector<Seen> seen;
  bool first_call = true;

  optim::Closure fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double f = obj(x, g);
    if (first_call) {
      first_call = false;
      if (sink) sink({0, obj.last(), g.norm(), 0.0, elapsed()});
    } else {
      seen.push_back({x, obj.last()});
    }
    return f;
  };

  optim::Hook hook = [&](const optim::IterationInfo& info, const Eigen::VectorXd& x) {
    if (sink) {
      auto it = std::find_if(seen.rbegin(), seen.rend(),
                             [&](const Seen& s) { return s.x == x; });
      loss::LossValues values;
      if (it != seen.rend()) {
        values = it->values;
      } else {
        Eigen::VectorXd g(x.size());
        obj(x, g);
        values = obj.last();
      }
      sink({info.iteration, values, info.grad_norm, info.step, elapsed()});
    }
    seen.clear();
    optim::HookAction act;
    if (cfg.mode == loss::Mode::structure_preserving && info.iteration % cfg.weight_period == 0) {
      const loss::WeightUpdate up = obj.update(x);
      if (!up.warning.empty()) std::cerr << "warning: " << up.warning << "\n";
      act.objective_changed = true;
    }
    return act;
  };

  TrainOutcome out{net, {}, 0.0, {}};
  try {
    out.result = optim::minimize(fn, net.flatten(), cfg.lbfgs(), hook);
    out.net.unflatten(out.result.x);
    if (out.result.iterations == 0 && out.result.reason == optim::StopReason::line_search_failed) {
      out.failure = "optimizer made no progress: " + out.result.message;
    }
  } catch (const Error& e) {
    out.failure = std::string("training failed: ") + e.what();
  }
  out.wall_seconds = elapsed();
  return out;
}

// -- Runs ---------------------------------------------------------------------

RunArtifacts run_case(const config::RunConfig& cfg, const fs::path& dir) {
  cfg.validate();
  fs::create_directories(dir);
  RunArtifacts art;
  art.dir = dir;
  art.config = cfg;
  art.checkpoint = dir / "model.bin";
  art.trace = dir / "trace.csv";
  art.contour = dir / "contour.csv";
  art.summary = dir / "summary.json";
  art.points = dir / "points.csv";

  const physics::CaseSpec spec = cfg.case_spec();
  write_text(dir / "config.txt", config::to_text(cfg));
  sampling::write_points_csv(sampling::build_trainset(spec.domain, cfg.seed, cfg.counts),
                             spec.domain, art.points);

  auto trace = std::make_unique<csv::Writer>(
      art.trace, std::vector<std::string>{"iteration", "total", "ic", "pde", "bc", "mass", "energy",
                                          "gamma", "omega", "grad_norm", "step", "wall_s"});
  TrainOutcome outcome = train(cfg, [&](const TraceRow& r) {
    trace->row(static_cast<double>(r.iteration), r.loss.total, r.loss.ic, r.loss.pde, r.loss.bc,
               r.loss.mass, r.loss.energy, r.loss.gamma, r.loss.omega, r.grad_norm, r.step,
               r.wall_s);
  });
  trace.reset();
  art.failure = outcome.failure;
  art.stop_reason = std::string(optim::to_string(outcome.result.reason));
  outcome.net.save(art.checkpoint);

  json summary = json::object();
  summary["case"] = std::string(physics::to_string(cfg.case_name));
  summary["mode"] = std::string(loss::to_string(cfg.mode));
  summary["seed"] = cfg.seed;
  summary["config"] = config_json(cfg);

  json metrics = json::object();
  if (art.failure.empty()) {
    try {
      art.evaluation = evaluate(outcome.net, cfg);
      write_evaluation(art.evaluation, cfg, art);
      write_contour(art.evaluation, art.contour);
      write_profiles(art.evaluation, dir, art.profiles);
      metrics = metrics_json(art.evaluation);
      if (art.evaluation.reference_check && !(*art.evaluation.reference_check < kHirotaCheckTol)) {
        art.failure = "Hirota reference disagrees with the spectral oracle by " +
                      config::format_value(*art.evaluation.reference_check);
      }
    } catch (const Error& e) {
      art.failure = std::string("evaluation failed: ") + e.what();
    }
  }
  metrics["final_loss"] = outcome.result.f;
  metrics["iterations"] = outcome.result.iterations;
  metrics["evaluations"] = outcome.result.evaluations;
  metrics["stop_reason"] = art.stop_reason;
  summary["metrics"] = std::move(metrics);
  summary["status"] = art.failure.empty() ? "ok" : "failed";
  summary["failure"] = art.failure;
  summary["timing"] = {{"wall_s", outcome.wall_seconds}};
  write_text(art.summary, summary.dump(2) + "\n");

  art.ok = art.failure.empty();
  return art;
}

config::RunConfig load_run_config(const fs::path& run_dir) {
  const fs::path path = run_dir / "summary.json";
  json summary;
  try {
    summary = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
  if (!summary.contains("config") || !summary["config"].is_object()) {
    throw Error(path.string() + ": missing config object");
  }
  config::RunConfig cfg;
  for (const auto& [k, v] : summary["config"].items()) {
    try {
      config::set(cfg, k, v.get<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
  }
  return cfg;
}

RunArtifacts rederive(const fs::path& run_dir, const fs::path& out_dir) {
  RunArtifacts art;
  art.config = load_run_config(run_dir);
  art.checkpoint = run_dir / "model.bin";
  art.dir = out_dir;
  fs::create_directories(out_dir);
  const nn::Mlp net = nn::Mlp::load(art.checkpoint);
  art.evaluation = evaluate(net, art.config);
  write_evaluation(art.evaluation, art.config, art);
  art.ok = true;
  return art;
}

// -- Tables -------------------------------------------------------------------

void write_series_csv(const InvariantSeries& s, const fs::path& path) {
  csv::Writer w(path, {"t", "mass", "energy", "error"});
  for (const auto& r : s) w.row(r.t, r.mass, r.energy, r.error);
}

InvariantSeries read_series_csv(const fs::path& path) {
  const csv::Table table = csv::read(path);
  const auto t = table.numbers("t");
  const auto m = table.numbers("mass");
  const auto e = table.numbers("energy");
  const auto err = table.numbers("error");
  InvariantSeries s(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) s[i] = {t[i], m[i], e[i], err[i]};
  return s;
}

std::string render_series(const InvariantSeries& s, std::string_view title) {
  std::string out = std::string(title) + "\n";
  char buf[128];
  std::snprintf(buf, sizeof buf, "%6s %10s %10s %10s\n", "Time", "Mass", "Energy", "Error");
  out += buf;
  for (const auto& r : s) {
    std::snprintf(buf, sizeof buf, "%6.2f %10.4f %10.4f %10.2e\n", r.t, r.mass, r.energy, r.error);
    out += buf;
  }
  return out;
}

AblationTable ablation_table(const RunArtifacts& sp, const RunArtifacts& vanilla,
                             std::span<const double> times) {
  if (sp.config.mode != loss::Mode::structure_preserving) {
    throw InvalidArgument("ablation_table: first run is not structure-preserving");
  }
  if (vanilla.config.mode != loss::Mode::vanilla) {
    throw InvalidArgument("ablation_table: second run is not vanilla");
  }
  if (sp.config.case_name != vanilla.config.case_name) {
    throw InvalidArgument("ablation_table: runs are of different cases");
  }
  AblationTable t;
  t.case_name = std::string(physics::to_string(sp.config.case_name));
  t.activation = sp.config.activation == nn::Activation::sine ? "sine" : "tanh";
  t.lr = sp.config.lr;
  for (double time : times) {
    t.rows.push_back({time, row_at(sp.evaluation.table, time, "SP"),
                      row_at(vanilla.evaluation.table, time, "vanilla")});
  }
  return t;
}

void write_ablation_csv(const AblationTable& t, const fs::path& path) {
  csv::Writer w(path, {"t", "sp_mass", "sp_energy", "sp_error", "vanilla_mass", "vanilla_energy",
                       "vanilla_error"});
  for (const auto& r : t.rows) {
    w.row(r.t, r.sp.mass, r.sp.energy, r.sp.error, r.vanilla.mass, r.vanilla.energy,
          r.vanilla.error);
  }
}

AblationTable read_ablation_csv(const fs::path& path) {
  const csv::Table table = csv::read(path);
  const auto t = table.numbers("t");
  const auto sm = table.numbers("sp_mass");
  const auto se = table.numbers("sp_energy");
  const auto serr = table.numbers("sp_error");
  const auto vm = table.numbers("vanilla_mass");
  const auto ve = table.numbers("vanilla_energy");
  const auto verr = table.numbers("vanilla_error");
  AblationTable out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out.rows.push_back({t[i], {t[i], sm[i], se[i], serr[i]}, {t[i], vm[i], ve[i], verr[i]}});
  }
  return out;
}

std::string render_ablation(const AblationTable& t) {
  std::string out = t.case_name + ": learning rate = " + config::format_value(t.lr) + ", " +
                    t.activation + " activation\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "%6s | %-32s | %-32s\n", "", "SP-PINN", "Vanilla PINN");
  out += buf;
  std::snprintf(buf, sizeof buf, "%6s | %10s %10s %10s | %10s %10s %10s\n", "Time", "Mass",
                "Energy", "Error", "Mass", "Energy", "Error");
  out += buf;
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof buf, "%6.2f | %10.4f %10.4f %10.2e | %10.4f %10.4f %10.2e\n", r.t,
                  r.sp.mass, r.sp.energy, r.sp.error, r.vanilla.mass, r.vanilla.energy,
                  r.vanilla.error);
    out += buf;
  }
  return out;
}

AblationTable parse_ablation_text(std::string_view text) {
  AblationTable out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      const auto colon = line.find(": learning rate = ");
      const auto comma = line.find(", ", colon == std::string::npos ? 0 : colon);
      const auto act = line.rfind(" activation");
      if (colon == std::string::npos || comma == std::string::npos ||
          act == std::string::npos) {
        throw InvalidArgument("ablation text line 1: unexpected title '" + line + "'");
      }
      out.case_name = line.substr(0, colon);
      const std::string lr = line.substr(colon + 18, comma - colon - 18);
      out.lr = std::stod(lr);
      out.activation = line.substr(comma + 2, act - comma - 2);
      continue;
    }
    if (line_no <= 3) continue;
    if (line.empty()) continue;
    for (char& c : line) {
      if (c == '|') c = ' ';
    }
    std::istringstream cells(line);
    AblationRow r;
    if (!(cells >> r.t >> r.sp.mass >> r.sp.energy >> r.sp.error >> r.vanilla.mass >>
          r.vanilla.energy >> r.vanilla.error)) {
      throw InvalidArgument("ablation text line " + std::to_string(line_no) +
                            ": expected 7 numbers");
    }
    r.sp.t = r.vanilla.t = r.t;
    out.rows.push_back(r);
  }
  return out;
}

std::string format_time_tag(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", t);
  return buf;
}

}  // namespace kdv::experiments
