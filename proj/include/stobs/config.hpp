#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "stobs/errors.hpp"

namespace stobs {

/// One value of the flat key-value experiment config. The schema is closed:
/// unknown keys are rejected at parse time.
using ConfigValue = std::variant<std::int64_t, double, std::string, std::vector<double>>;

class ExperimentConfig {
 public:
  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_text(const std::string& text);

  /// Canonical text form; parse(serialize(c)) == c on every field.
  std::string serialize() const;

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set_int(const std::string& key, std::int64_t v);
  void set_double(const std::string& key, double v);
  void set_string(const std::string& key, const std::string& v);
  void set_array(const std::string& key, std::vector<double> v);

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_array(const std::string& key,
                                const std::vector<double>& fallback) const;

  const std::map<std::string, ConfigValue>& entries() const { return entries_; }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

 private:
  void check_key(const std::string& key, int expected_type) const;
  std::map<std::string, ConfigValue> entries_;
};

std::string format_double_exact(double v);

}  // namespace stobs
