#include "stobs/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace stobs {

namespace {

enum Type { kInt = 0, kDouble = 1, kString = 2, kArray = 3 };

const std::unordered_map<std::string, int>& schema() {
  static const std::unordered_map<std::string, int> s = {
      {"preset", kString},
      {"master_seed", kInt},
      {"output_dir", kString},
      {"threads", kInt},
      {"problem.dim", kInt},
      {"problem.n", kInt},
      {"problem.p", kDouble},
      {"problem.kappa", kDouble},
      {"problem.gamma", kDouble},
      {"problem.delta_reg", kDouble},
      {"problem.noise.kind", kString},
      {"problem.noise.c", kDouble},
      {"problem.noise.modes", kInt},
      {"problem.noise.q_decay", kDouble},
      {"problem.noise.clip", kDouble},
      {"problem.psi", kString},
      {"problem.f", kString},
      {"problem.u0", kString},
      {"step.dt", kDouble},
      {"step.epsilon", kDouble},
      {"step.newton_tol", kDouble},
      {"step.newton_max_iters", kInt},
      {"step.pen_reg", kDouble},
      {"run.horizon", kDouble},
      {"run.burn_in", kDouble},
      {"run.n_paths", kInt},
      {"run.thin", kInt},
      {"run.functional", kString},
      {"run.clip_bound", kDouble},
      {"run.epsilons", kArray},
      {"run.horizons", kArray},
      {"run.times", kArray},
      {"run.x0", kString},
      {"run.y0", kString},
      {"run.tol", kDouble},
      {"run.delta", kDouble},
      {"run.trials", kInt},
      {"run.export", kString},
      {"run.record_every", kInt},
      {"run.min_slope", kDouble},
      {"run.max_ratio", kDouble},
      {"run.fit_floor", kDouble},
      {"run.exponent_slack", kDouble},
      {"run.rel_tol", kDouble},
      {"run.grad_tol", kDouble},
      {"run.slack_tol", kDouble},
  };
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& tok, const std::string& key) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw ValidationError("config: bad number '" + tok + "' for key " + key);
  }
  return v;
}

std::int64_t parse_integer(const std::string& tok, const std::string& key) {
  std::int64_t v = 0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw ValidationError("config: key " + key + " needs an integer, got '" + tok + "'");
  }
  return v;
}

}  // namespace

std::string format_double_exact(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

void ExperimentConfig::check_key(const std::string& key, int expected_type) const {
  const auto it = schema().find(key);
  if (it == schema().end()) {
    throw ValidationError("config: unknown key '" + key + "'");
  }
  if (it->second != expected_type) {
    throw ValidationError("config: wrong value type for key '" + key + "'");
  }
}

void ExperimentConfig::set_int(const std::string& key, std::int64_t v) {
  check_key(key, kInt);
  entries_[key] = v;
}
void ExperimentConfig::set_double(const std::string& key, double v) {
  check_key(key, kDouble);
  entries_[key] = v;
}
void ExperimentConfig::set_string(const std::string& key, const std::string& v) {
  check_key(key, kString);
  entries_[key] = v;
}
void ExperimentConfig::set_array(const std::string& key, std::vector<double> v) {
  check_key(key, kArray);
  entries_[key] = std::move(v);
}

std::int64_t ExperimentConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : std::get<std::int64_t>(it->second);
}
double ExperimentConfig::get_double(const std::string& key, double fallback) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  if (std::holds_alternative<std::int64_t>(it->second)) {
    return static_cast<double>(std::get<std::int64_t>(it->second));
  }
  return std::get<double>(it->second);
}
std::string ExperimentConfig::get_string(const std::string& key,
                                         const std::string& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : std::get<std::string>(it->second);
}
std::vector<double> ExperimentConfig::get_array(const std::string& key,
                                                const std::vector<double>& fallback) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? fallback : std::get<std::vector<double>>(it->second);
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    // strip comments outside quotes
    bool quoted = false;
    std::string line;
    for (char ch : raw) {
      if (ch == '"') quoted = !quoted;
      if (ch == '#' && !quoted) break;
      line.push_back(ch);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto it = schema().find(key);
    if (it == schema().end()) {
      throw ValidationError("config line " + std::to_string(line_no) + ": unknown key '" +
                            key + "'");
    }
    if (val.empty()) {
      throw ValidationError("config line " + std::to_string(line_no) + ": empty value");
    }
    switch (it->second) {
      case kString: {
        if (val.size() < 2 || val.front() != '"' || val.back() != '"') {
          throw ValidationError("config line " + std::to_string(line_no) +
                                ": string values must be quoted");
        }
        cfg.entries_[key] = val.substr(1, val.size() - 2);
        break;
      }
      case kArray: {
        if (val.front() != '[' || val.back() != ']') {
          throw ValidationError("config line " + std::to_string(line_no) +
                                ": array values use [a, b, c]");
        }
        std::vector<double> arr;
        std::string body = val.substr(1, val.size() - 2);
        std::istringstream items(body);
        std::string tok;
        while (std::getline(items, tok, ',')) {
          tok = trim(tok);
          if (tok.empty()) continue;
          arr.push_back(parse_number(tok, key));
        }
        cfg.entries_[key] = std::move(arr);
        break;
      }
      case kInt:
        cfg.entries_[key] = parse_integer(val, key);
        break;
      case kDouble:
        cfg.entries_[key] = parse_number(val, key);
        break;
      default:
        throw ValidationError("config: unreachable type");
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream out;
  for (const auto& [key, value] : entries_) {
    out << key << " = ";
    if (std::holds_alternative<std::int64_t>(value)) {
      out << std::get<std::int64_t>(value);
    } else if (std::holds_alternative<double>(value)) {
      out << format_double_exact(std::get<double>(value));
    } else if (std::holds_alternative<std::string>(value)) {
      out << '"' << std::get<std::string>(value) << '"';
    } else {
      const auto& arr = std::get<std::vector<double>>(value);
      out << '[';
      for (std::size_t i = 0; i < arr.size(); ++i) {
        if (i) out << ", ";
        out << format_double_exact(arr[i]);
      }
      out << ']';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace stobs
