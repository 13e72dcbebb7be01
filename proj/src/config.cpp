#include "kdv/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "kdv/error.hpp"

namespace kdv::config {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + std::string(value) + "' for key '" + std::string(key) +
                      "'");
  }
  return out;
}

template <class T>
T parse_positive(std::string_view key, std::string_view value) {
  const T v = parse_number<T>(key, value);
  if (!(v > T{0})) {
    throw ConfigError("key '" + std::string(key) + "' must be positive (got " +
                      std::string(value) + ")");
  }
  return v;
}

}  // namespace

std::string format_value(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int default_depth(physics::CaseName name) {
  return name == physics::CaseName::two_soliton ? 7 : 4;
}

int RunConfig::resolved_depth() const { return depth > 0 ? depth : default_depth(case_name); }

physics::CaseSpec RunConfig::case_spec() const {
  physics::CaseSpec spec = physics::preset(case_name);
  if (t_max > 0.0) spec.domain.t_max = t_max;
  return spec;
}

optim::LbfgsConfig RunConfig::lbfgs() const {
  optim::LbfgsConfig c;
  c.max_iter = max_iter;
  c.history = history;
  c.initial_step = lr;
  c.grad_tol = grad_tol;
  c.step_tol = step_tol;
  c.max_line_search = max_line_search;
  return c;
}

loss::WeightState RunConfig::weight_state() const {
  loss::WeightState s = loss::WeightState::initial(mode);
  s.update_period = weight_period;
  return s;
}

void RunConfig::validate() const {
  if (width < 1) throw ConfigError("width must be >= 1");
  if (depth < 0) throw ConfigError("depth must be >= 0 (0 selects the case default)");
  if (weight_period < 1) throw ConfigError("weight_period must be >= 1");
  if (eval_nt < 2 || eval_nx < 2) throw ConfigError("evaluation grid needs >= 2 points per axis");
  if (t_max < 0.0) throw ConfigError("t_max must be >= 0");
  try {
    lbfgs().validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  for (std::size_t n : {counts.n_ic, counts.n_f, counts.n_b, counts.n_t, counts.n_q}) {
    if (n < 2) throw ConfigError("all sample counts must be >= 2");
  }
}

std::vector<std::pair<std::string, std::string>> entries(const RunConfig& c) {
  return {
      {"case", std::string(physics::to_string(c.case_name))},
      {"mode", std::string(loss::to_string(c.mode))},
      {"depth", std::to_string(c.resolved_depth())},
      {"width", std::to_string(c.width)},
      {"activation", c.activation == nn::Activation::sine ? "sine" : "tanh"},
      {"init", std::string(nn::to_string(c.init))},
      {"lr", format_value(c.lr)},
      {"max_iter", std::to_string(c.max_iter)},
      {"history", std::to_string(c.history)},
      {"grad_tol", format_value(c.grad_tol)},
      {"step_tol", format_value(c.step_tol)},
      {"max_line_search", std::to_string(c.max_line_search)},
      {"n_ic", std::to_string(c.counts.n_ic)},
      {"n_f", std::to_string(c.counts.n_f)},
      {"n_b", std::to_string(c.counts.n_b)},
      {"n_t", std::to_string(c.counts.n_t)},
      {"n_q", std::to_string(c.counts.n_q)},
      {"seed", std::to_string(c.seed)},
      {"t_max", format_value(c.case_spec().domain.t_max)},
      {"weight_period", std::to_string(c.weight_period)},
      {"eval_nt", std::to_string(c.eval_nt)},
      {"eval_nx", std::to_string(c.eval_nx)},
  };
}

void set(RunConfig& c, std::string_view key, std::string_view value) {
  if (key == "case") {
    const auto v = physics::parse_case(value);
    if (!v) throw ConfigError("unknown case '" + std::string(value) + "'");
    c.case_name = *v;
  } else if (key == "mode") {
    const auto v = loss::parse_mode(value);
    if (!v) throw ConfigError("unknown mode '" + std::string(value) + "'");
    c.mode = *v;
  } else if (key == "activation") {
    if (value == "sine") {
      c.activation = nn::Activation::sine;
    } else if (value == "tanh") {
      c.activation = nn::Activation::tanh;
    } else {
      throw ConfigError("unknown activation '" + std::string(value) + "'");
    }
  } else if (key == "init") {
    const auto v = nn::parse_init(value);
    if (!v) throw ConfigError("unknown init '" + std::string(value) + "'");
    c.init = *v;
  } else if (key == "depth") {
    c.depth = parse_number<int>(key, value);
  } else if (key == "width") {
    c.width = parse_positive<int>(key, value);
  } else if (key == "lr") {
    c.lr = parse_positive<double>(key, value);
  } else if (key == "max_iter") {
    c.max_iter = parse_number<int>(key, value);
  } else if (key == "history") {
    c.history = parse_positive<int>(key, value);
  } else if (key == "grad_tol") {
    c.grad_tol = parse_number<double>(key, value);
  } else if (key == "step_tol") {
    c.step_tol = parse_number<double>(key, value);
  } else if (key == "max_line_search") {
    c.max_line_search = parse_positive<int>(key, value);
  } else if (key == "n_ic") {
    c.counts.n_ic = parse_number<std::size_t>(key, value);
  } else if (key == "n_f") {
    c.counts.n_f = parse_number<std::size_t>(key, value);
  } else if (key == "n_b") {
    c.counts.n_b = parse_number<std::size_t>(key, value);
  } else if (key == "n_t") {
    c.counts.n_t = parse_number<std::size_t>(key, value);
  } else if (key == "n_q") {
    c.counts.n_q = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "t_max") {
    c.t_max = parse_number<double>(key, value);
  } else if (key == "weight_period") {
    c.weight_period = parse_positive<int>(key, value);
  } else if (key == "eval_nt") {
    c.eval_nt = parse_number<std::size_t>(key, value);
  } else if (key == "eval_nx") {
    c.eval_nx = parse_number<std::size_t>(key, value);
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

void apply_text(RunConfig& cfg, std::string_view text, std::string_view origin) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(where + "expected 'key = value', got '" + std::string(line) + "'");
    }
    try {
      set(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void apply_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_text(cfg, ss.str(), path.string());
}

std::string to_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& [k, v] : entries(cfg)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace kdv::config
