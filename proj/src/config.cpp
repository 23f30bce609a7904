#include "tankfdi/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <utility>

namespace tankfdi {

namespace {

struct FieldError {
  std::string key;  // "section.key"
  std::string message;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string current;
  std::istringstream in(s);
  while (std::getline(in, current, sep)) parts.push_back(trim(current));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

double parse_double(const std::string& token) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (!token.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || token.empty()) {
    throw std::invalid_argument("not a number: '" + token + "'");
  }
  return v;
}

std::vector<double> parse_list(const std::string& value) {
  std::vector<double> out;
  for (const auto& t : split(value, ',')) out.push_back(parse_double(t));
  return out;
}

Vector parse_vector(const std::string& value, Eigen::Index expected) {
  const auto list = parse_list(value);
  if (static_cast<Eigen::Index>(list.size()) != expected) {
    throw std::invalid_argument("expected " + std::to_string(expected) + " comma-separated values");
  }
  return Eigen::Map<const Vector>(list.data(), expected);
}

std::array<double, 3> parse_triple(const std::string& value) {
  const Vector v = parse_vector(value, 3);
  return {v(0), v(1), v(2)};
}

long long parse_integer(const std::string& token) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty()) {
    throw std::invalid_argument("not an integer: '" + token + "'");
  }
  return v;
}

bool parse_bool(const std::string& token) {
  if (token == "true" || token == "1" || token == "yes") return true;
  if (token == "false" || token == "0" || token == "no") return false;
  throw std::invalid_argument("not a boolean: '" + token + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_double(v(i));
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  return join(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())).eval());
}

using Handler = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, std::map<std::string, Handler>>& handlers() {
  static const std::map<std::string, std::map<std::string, Handler>> table{
      {"plant",
       {{"psi", [](auto& c, const auto& v) { c.plant.psi = parse_triple(v); }},
        {"delta", [](auto& c, const auto& v) { c.plant.delta = parse_triple(v); }}}},
      {"input",
       {{"breakpoints", [](auto& c, const auto& v) { c.input_breakpoints = parse_list(v); }},
        {"values", [](auto& c, const auto& v) { c.input_values = parse_list(v); }}}},
      {"fault",
       {{"t_f", [](auto& c, const auto& v) { c.fault.t_f = parse_double(v); }},
        {"delta_bar", [](auto& c, const auto& v) { c.fault.delta_bar = parse_double(v); }}}},
      {"observer",
       {{"poles",
         [](auto& c, const auto& v) {
           c.poles.clear();
           for (double p : parse_list(v)) c.poles.emplace_back(p, 0.0);
         }},
        {"xhat0", [](auto& c, const auto& v) { c.xhat0 = parse_vector(v, 3); }},
        {"x_lo", [](auto& c, const auto& v) { c.x_lo = parse_vector(v, 3); }},
        {"x_hi", [](auto& c, const auto& v) { c.x_hi = parse_vector(v, 3); }},
        {"threshold",
         [](auto& c, const auto& v) {
           if (v == "modal") {
             c.threshold = ThresholdKind::kModal;
           } else if (v == "box") {
             c.threshold = ThresholdKind::kBox;
           } else {
             throw std::invalid_argument("threshold must be modal or box");
           }
         }},
        {"residual_floor", [](auto& c, const auto& v) { c.residual_floor = parse_double(v); }}}},
      {"askf",
       {{"a", [](auto& c, const auto& v) { c.scaling.a = parse_double(v); }},
        {"b", [](auto& c, const auto& v) { c.scaling.b = parse_double(v); }},
        {"c", [](auto& c, const auto& v) { c.scaling.c = parse_double(v); }},
        {"phi0", [](auto& c, const auto& v) { c.scaling.phi0 = parse_double(v); }}}},
      {"consensus",
       {{"sensors",
         [](auto& c, const auto& v) {
           const long long n = parse_integer(v);
           if (n < 1) throw std::invalid_argument("sensors must be >= 1");
           c.sensors = static_cast<std::size_t>(n);
         }},
        {"prior_scaling",
         [](auto& c, const auto& v) {
           if (v == "1") {
             c.consensus.prior_scaling = PriorScaling::kUnity;
           } else if (v == "n") {
             c.consensus.prior_scaling = PriorScaling::kSensorCount;
           } else {
             throw std::invalid_argument("prior_scaling must be '1' or 'n'");
           }
         }},
        {"propagate_input",
         [](auto& c, const auto& v) { c.consensus.propagate_input = parse_bool(v); }}}},
      {"run",
       {{"dt", [](auto& c, const auto& v) { c.dt = parse_double(v); }},
        {"horizon", [](auto& c, const auto& v) { c.horizon = parse_double(v); }},
        {"sample_period", [](auto& c, const auto& v) { c.sample_period = parse_double(v); }},
        {"process_noise", [](auto& c, const auto& v) { c.process_noise = parse_double(v); }},
        {"measurement_noise",
         [](auto& c, const auto& v) { c.measurement_noise = parse_double(v); }},
        {"initial_covariance",
         [](auto& c, const auto& v) { c.initial_covariance = parse_double(v); }},
        {"seed",
         [](auto& c, const auto& v) {
           const long long s = parse_integer(v);
           if (s < 0) throw std::invalid_argument("seed must be nonnegative");
           c.seed = static_cast<std::uint64_t>(s);
         }},
        {"monte_carlo",
         [](auto& c, const auto& v) { c.monte_carlo = static_cast<int>(parse_integer(v)); }},
        {"threads", [](auto& c, const auto& v) { c.threads = static_cast<int>(parse_integer(v)); }},
        {"initial_conditions",
         [](auto& c, const auto& v) {
           c.initial_conditions.clear();
           for (const auto& row : split(v, ';')) c.initial_conditions.push_back(parse_vector(row, 3));
         }},
        {"output_dir", [](auto& c, const auto& v) { c.output_dir = v; }}}},
  };
  return table;
}

std::optional<FieldError> check(const ExperimentConfig& c) {
  try {
    TankParams p = c.plant;
    p.delta_bar = c.fault.delta_bar;
    p.validate();
  } catch (const Error& e) {
    const std::string what = e.what();
    const std::string key = what.rfind("psi", 0) == 0     ? "plant.psi"
                            : what.rfind("delta_bar", 0) == 0 ? "fault.delta_bar"
                                                             : "plant.delta";
    return FieldError{key, what};
  }
  try {
    (void)c.input();
  } catch (const Error& e) {
    return FieldError{"input.values", e.what()};
  }
  for (double v : c.input_values) {
    if (!std::isfinite(v)) return FieldError{"input.values", "input values must be finite"};
  }
  if (!std::isfinite(c.fault.t_f) || c.fault.t_f < 0.0) {
    return FieldError{"fault.t_f", "t_f must be a nonnegative time"};
  }
  if (c.poles.size() != 3) return FieldError{"observer.poles", "exactly 3 poles are required"};
  for (const auto& p : c.poles) {
    if (!(p.real() < 0.0)) return FieldError{"observer.poles", "observer poles must be stable"};
  }
  for (Eigen::Index i = 0; i < 3; ++i) {
    if (!(c.x_lo(i) <= c.xhat0(i) && c.xhat0(i) <= c.x_hi(i))) {
      return FieldError{"observer.xhat0", "xhat0 must lie inside [x_lo, x_hi]"};
    }
  }
  if (!(c.residual_floor >= 0.0) || !std::isfinite(c.residual_floor)) {
    return FieldError{"observer.residual_floor", "residual_floor must be finite and nonnegative"};
  }
  try {
    c.scaling.validate();
  } catch (const Error& e) {
    return FieldError{"askf.a", e.what()};
  }
  if (!(c.dt > 0.0)) return FieldError{"run.dt", "dt must be positive"};
  if (!(c.horizon > 0.0)) return FieldError{"run.horizon", "horizon must be positive"};
  if (!(c.sample_period >= c.dt)) {
    return FieldError{"run.sample_period", "sample_period must be at least dt"};
  }
  const double ratio = c.sample_period / c.dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6 * ratio) {
    return FieldError{"run.sample_period", "sample_period must be an integer multiple of dt"};
  }
  if (!(c.horizon >= c.sample_period)) {
    return FieldError{"run.horizon", "horizon must cover at least one filter sample"};
  }
  if (!(c.process_noise >= 0.0)) return FieldError{"run.process_noise", "must be nonnegative"};
  if (!(c.measurement_noise > 0.0)) {
    return FieldError{"run.measurement_noise", "must be positive (R must be positive definite)"};
  }
  if (!(c.initial_covariance > 0.0)) return FieldError{"run.initial_covariance", "must be positive"};
  if (c.monte_carlo < 1) return FieldError{"run.monte_carlo", "monte_carlo must be >= 1"};
  if (c.threads < 0) return FieldError{"run.threads", "threads must be >= 0"};
  if (c.initial_conditions.empty()) {
    return FieldError{"run.initial_conditions", "at least one initial condition is required"};
  }
  for (const auto& x0 : c.initial_conditions) {
    if (x0.size() != 3 || !x0.allFinite()) {
      return FieldError{"run.initial_conditions", "initial conditions must be finite 3-vectors"};
    }
  }
  return std::nullopt;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (auto err = check(*this)) throw ConfigError("[" + err->key + "] " + err->message);
}

std::size_t ExperimentConfig::steps_per_sample() const {
  return static_cast<std::size_t>(std::llround(sample_period / dt));
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  std::map<std::string, int> key_lines;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  auto fail = [&](int line, const std::string& msg) -> ConfigError {
    return ConfigError(source + ":" + std::to_string(line) + ": " + msg);
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (const auto comment = line.find('#'); comment != std::string::npos) {
      line = line.substr(0, comment);
    }
    line = trim(line);
    if (line.empty() || line.front() == ';') continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw fail(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!handlers().contains(section)) throw fail(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail(line_no, "expected 'key = value'");
    if (section.empty()) throw fail(line_no, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto& keys = handlers().at(section);
    const auto it = keys.find(key);
    if (it == keys.end()) throw fail(line_no, "unknown key '" + key + "' in [" + section + "]");
    const std::string qualified = section + "." + key;
    if (key_lines.contains(qualified)) throw fail(line_no, "duplicate key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const std::exception& e) {
      throw fail(line_no, key + ": " + e.what());
    }
    key_lines[qualified] = line_no;
  }

  if (auto err = check(cfg)) {
    const auto it = key_lines.find(err->key);
    const std::string where = it != key_lines.end() ? std::to_string(it->second) : "0";
    throw ConfigError(source + ":" + where + ": [" + err->key + "] " + err->message);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[plant]\n"
      << "psi = " << join(std::vector<double>(c.plant.psi.begin(), c.plant.psi.end())) << "\n"
      << "delta = " << join(std::vector<double>(c.plant.delta.begin(), c.plant.delta.end()))
      << "\n\n[input]\n"
      << "breakpoints = " << join(c.input_breakpoints) << "\n"
      << "values = " << join(c.input_values) << "\n\n[fault]\n"
      << "t_f = " << format_double(c.fault.t_f) << "\n"
      << "delta_bar = " << format_double(c.fault.delta_bar) << "\n\n[observer]\n";
  std::vector<double> poles;
  for (const auto& p : c.poles) poles.push_back(p.real());
  out << "poles = " << join(poles) << "\n"
      << "xhat0 = " << join(c.xhat0) << "\n"
      << "x_lo = " << join(c.x_lo) << "\n"
      << "x_hi = " << join(c.x_hi) << "\n"
      << "threshold = " << (c.threshold == ThresholdKind::kBox ? "box" : "modal") << "\n"
      << "residual_floor = " << format_double(c.residual_floor) << "\n\n[askf]\n"
      << "a = " << format_double(c.scaling.a) << "\n"
      << "b = " << format_double(c.scaling.b) << "\n"
      << "c = " << format_double(c.scaling.c) << "\n"
      << "phi0 = " << format_double(c.scaling.phi0) << "\n\n[consensus]\n"
      << "sensors = " << c.sensors << "\n"
      << "prior_scaling = " << (c.consensus.prior_scaling == PriorScaling::kUnity ? "1" : "n") << "\n"
      << "propagate_input = " << (c.consensus.propagate_input ? "true" : "false") << "\n\n[run]\n"
      << "dt = " << format_double(c.dt) << "\n"
      << "horizon = " << format_double(c.horizon) << "\n"
      << "sample_period = " << format_double(c.sample_period) << "\n"
      << "process_noise = " << format_double(c.process_noise) << "\n"
      << "measurement_noise = " << format_double(c.measurement_noise) << "\n"
      << "initial_covariance = " << format_double(c.initial_covariance) << "\n"
      << "seed = " << c.seed << "\n"
      << "monte_carlo = " << c.monte_carlo << "\n"
      << "threads = " << c.threads << "\n"
      << "initial_conditions = ";
  for (std::size_t i = 0; i < c.initial_conditions.size(); ++i) {
    if (i) out << "; ";
    out << join(c.initial_conditions[i]);
  }
  out << "\noutput_dir = " << c.output_dir.string() << "\n";
  return out.str();
}

}  // namespace tankfdi
