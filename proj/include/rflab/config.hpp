#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rflab {

/// Raised for malformed configuration; names the offending field and, for files, the line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string &message, int line = 0);
  const std::string &field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

/// Flat key=value configuration. Keys are validated against a fixed schema; values are kept
/// as text and converted by typed getters.
class Config {
 public:
  /// Parses `key = value` lines; `#` starts a comment. Throws ConfigError.
  static Config parse(const std::string &text, const std::string &source = "<config>");
  static Config load(const std::string &path);

  /// Applies a `key=value` override from the command line.
  void set(const std::string &assignment);
  void set(const std::string &key, const std::string &value);

  bool has(const std::string &key) const { return values_.count(key) > 0; }
  std::string get_string(const std::string &key, const std::string &fallback) const;
  double get_real(const std::string &key, double fallback) const;
  long get_int(const std::string &key, long fallback) const;
  std::uint64_t get_u64(const std::string &key, std::uint64_t fallback) const;
  std::vector<double> get_list(const std::string &key, const std::vector<double> &fallback) const;

  const std::map<std::string, std::string> &values() const { return values_; }

 private:
  void validate(const std::string &key, const std::string &value, int line) const;
  std::map<std::string, std::string> values_;
};

/// Typed view of the fields shared by every experiment.
struct ExperimentConfig {
  std::string experiment;
  std::size_t n = 64;
  double L = 1.0;
  std::string preset = "sin1";  // zero | sin1 | sin2d | custom-file
  std::string file;
  std::optional<double> t, dt_pde, dt_sde;
  std::optional<std::size_t> M;
  std::uint64_t seed = 20240601;
  std::string out;

  static ExperimentConfig from(const Config &cfg);
};

}  // namespace rflab
