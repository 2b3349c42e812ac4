#include "rflab/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rflab {

namespace {

enum class Kind { text, real, positive, integer, positive_integer, u64, sign, list, preset, mode };

const std::map<std::string, Kind> &schema() {
  static const std::map<std::string, Kind> s = {
      {"experiment", Kind::text},   {"n", Kind::positive_integer},
      {"l", Kind::positive},        {"preset", Kind::preset},
      {"file", Kind::text},         {"t", Kind::positive},
      {"dt_pde", Kind::positive},   {"dt_sde", Kind::positive},
      {"m", Kind::positive_integer}, {"seed", Kind::u64},
      {"out", Kind::text},          {"save_every", Kind::positive},
      {"r", Kind::sign},            {"c", Kind::real},
      {"alpha", Kind::real},        {"beta", Kind::real},
      {"tau_max", Kind::positive},  {"points", Kind::positive_integer},
      {"rho0", Kind::positive},     {"r0", Kind::positive},
      {"t_obs", Kind::positive},    {"mode", Kind::mode},
      {"s_grid", Kind::list},       {"x0", Kind::list},
      {"y0", Kind::list},           {"delta", Kind::positive},
      {"d", Kind::positive},        {"threads", Kind::positive_integer},
      {"bounds", Kind::text},       {"paths_csv", Kind::text},
  };
  return s;
}

std::string trim(const std::string &s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool parse_double(const std::string &s, double &out) {
  const char *end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_long(const std::string &s, long &out) {
  const char *end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(trim(item));
  return parts;
}

}  // namespace

ConfigError::ConfigError(std::string field, const std::string &message, int line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": field '" + field + "': " +
                                        message
                                  : "field '" + field + "': " + message),
      field_(std::move(field)),
      line_(line) {}

void Config::validate(const std::string &key, const std::string &value, int line) const {
  const auto it = schema().find(key);
  if (it == schema().end()) throw ConfigError(key, "unknown field", line);
  double d = 0.0;
  long i = 0;
  switch (it->second) {
    case Kind::text:
      if (value.empty()) throw ConfigError(key, "empty value", line);
      break;
    case Kind::real:
      if (!parse_double(value, d)) throw ConfigError(key, "expected a real number", line);
      break;
    case Kind::positive:
      if (!parse_double(value, d)) throw ConfigError(key, "expected a real number", line);
      if (!(d > 0.0)) throw ConfigError(key, "must be positive", line);
      break;
    case Kind::integer:
      if (!parse_long(value, i)) throw ConfigError(key, "expected an integer", line);
      break;
    case Kind::positive_integer:
      if (!parse_long(value, i)) throw ConfigError(key, "expected an integer", line);
      if (i <= 0) throw ConfigError(key, "must be positive", line);
      break;
    case Kind::u64: {
      std::uint64_t u = 0;
      const char *end = value.data() + value.size();
      auto [ptr, ec] = std::from_chars(value.data(), end, u);
      if (ec != std::errc() || ptr != end) throw ConfigError(key, "expected an unsigned integer", line);
      break;
    }
    case Kind::sign:
      if (!parse_long(value, i) || i < -1 || i > 1) throw ConfigError(key, "must be -1, 0 or 1", line);
      break;
    case Kind::list:
      for (const auto &part : split_list(value)) {
        if (!parse_double(part, d)) throw ConfigError(key, "expected comma-separated reals", line);
      }
      break;
    case Kind::preset:
      if (value != "zero" && value != "sin1" && value != "sin2d" && value != "custom-file") {
        throw ConfigError(key, "expected zero, sin1, sin2d or custom-file", line);
      }
      break;
    case Kind::mode:
      if (value != "torus" && value != "scalar") throw ConfigError(key, "expected torus or scalar", line);
      break;
  }
}

Config Config::parse(const std::string &text, const std::string &source) {
  Config cfg;
  std::istringstream is(text);
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(body, "expected key=value in " + source, line);
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    cfg.validate(key, value, line);
    cfg.values_[key] = value;
  }
  return cfg;
}

Config Config::load(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config", "cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path);
}

void Config::set(const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError(assignment, "expected key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void Config::set(const std::string &key, const std::string &value) {
  validate(key, value, 0);
  values_[key] = value;
}

std::string Config::get_string(const std::string &key, const std::string &fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_real(const std::string &key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  double d = 0.0;
  parse_double(it->second, d);
  return d;
}

long Config::get_int(const std::string &key, long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  long i = 0;
  parse_long(it->second, i);
  return i;
}

std::uint64_t Config::get_u64(const std::string &key, std::uint64_t fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::uint64_t u = 0;
  std::from_chars(it->second.data(), it->second.data() + it->second.size(), u);
  return u;
}

std::vector<double> Config::get_list(const std::string &key,
                                     const std::vector<double> &fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  std::vector<double> out;
  for (const auto &part : split_list(it->second)) {
    double d = 0.0;
    parse_double(part, d);
    out.push_back(d);
  }
  return out;
}

ExperimentConfig ExperimentConfig::from(const Config &cfg) {
  ExperimentConfig e;
  e.experiment = cfg.get_string("experiment", "");
  e.n = static_cast<std::size_t>(cfg.get_int("n", 64));
  if (e.n < 8 || (e.n & (e.n - 1)) != 0) throw ConfigError("n", "must be a power of two >= 8");
  e.L = cfg.get_real("l", 1.0);
  e.preset = cfg.get_string("preset", "sin1");
  e.file = cfg.get_string("file", "");
  if (cfg.has("file") && cfg.has("preset") && e.preset != "custom-file") {
    throw ConfigError("file", "give either a preset or a file, not both");
  }
  if (cfg.has("file")) e.preset = "custom-file";
  if (e.preset == "custom-file" && e.file.empty()) {
    throw ConfigError("file", "preset custom-file needs a file");
  }
  if (cfg.has("t")) e.t = cfg.get_real("t", 0.0);
  if (cfg.has("dt_pde")) e.dt_pde = cfg.get_real("dt_pde", 0.0);
  if (cfg.has("dt_sde")) e.dt_sde = cfg.get_real("dt_sde", 0.0);
  if (cfg.has("m")) e.M = static_cast<std::size_t>(cfg.get_int("m", 0));
  e.seed = cfg.get_u64("seed", e.seed);
  e.out = cfg.get_string("out", "");
  return e;
}

}  // namespace rflab
