#pragma once

// Run configuration: every knob of one training run, with the benchmark presets
// as defaults. Stored and exchanged as flat `key = value` text.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kdv/lbfgs.hpp"
#include "kdv/loss.hpp"
#include "kdv/network.hpp"
#include "kdv/physics.hpp"
#include "kdv/sampling.hpp"

namespace kdv::config {

struct RunConfig {
  physics::CaseName case_name = physics::CaseName::one_soliton;
  loss::Mode mode = loss::Mode::structure_preserving;
  int depth = 0;  // 0 selects the case default (4, 7, 4)
  int width = 40;
  nn::Activation activation = nn::Activation::sine;
  nn::Init init = nn::Init::pytorch;
  double lr = 1.0;
  int max_iter = 3000;
  int history = 50;
  double grad_tol = 1e-9;
  double step_tol = 1e-12;
  int max_line_search = 25;
  sampling::SampleCounts counts;
  std::uint64_t seed = 7;
  double t_max = 0.0;  // 0 keeps the preset horizon
  int weight_period = 10;
  std::size_t eval_nt = 200;
  std::size_t eval_nx = 400;

  int resolved_depth() const;
  physics::CaseSpec case_spec() const;  // preset with the horizon override applied
  optim::LbfgsConfig lbfgs() const;
  loss::WeightState weight_state() const;
  void validate() const;
};

/// Depth used in the benchmark table for each case.
int default_depth(physics::CaseName name);

/// All keys in canonical order with their current values.
std::vector<std::pair<std::string, std::string>> entries(const RunConfig& cfg);

/// Sets one key; throws ConfigError on unknown keys or unparsable values.
void set(RunConfig& cfg, std::string_view key, std::string_view value);

/// Applies `key = value` lines ('#' comments and blank lines allowed).
/// Errors carry `origin:line:` prefixes.
void apply_text(RunConfig& cfg, std::string_view text, std::string_view origin);
void apply_file(RunConfig& cfg, const std::filesystem::path& path);

/// Canonical text form; apply_text(to_text(c)) reproduces c.
std::string to_text(const RunConfig& cfg);

std::string format_value(double v);

}  // namespace kdv::config
