#include "sgnlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <vector>

namespace sgnlab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment introduced by whitespace + '#' or ';'.
std::string strip_comment(const std::string& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((s[i] == '#' || s[i] == ';') && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t')) {
      return s.substr(0, i);
    }
  }
  return s;
}

struct Located {
  std::string value;
  int line;
};

class Reader {
 public:
  Reader(std::string source, std::map<std::string, Located> values, std::map<std::string, int> sections,
         int last_line)
      : source_(std::move(source)),
        values_(std::move(values)),
        sections_(std::move(sections)),
        last_line_(last_line) {}

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double number(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_number(it->second);
  }

  double required_number(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) missing(key);
    return parse_number(it->second);
  }

  int branch(const std::string& key, int fallback, bool required = false) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
      if (required) missing(key);
      return fallback;
    }
    const double v = parse_number(it->second);
    if (v != 1 && v != -1) fail(it->second.line, key + " must be +1 or -1, got '" + it->second.value + "'");
    return int(v);
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second.value;
  }

  template <typename T>
  T parsed(const std::string& key, T fallback, const std::function<T(const std::string&)>& parse) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      return parse(it->second.value);
    } catch (const std::exception& e) {
      fail(it->second.line, key + ": " + e.what());
    }
  }

  int line_of(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? 0 : it->second.line;
  }

  [[noreturn]] void fail(int line, const std::string& message) const {
    throw ConfigError(source_, line, message);
  }

 private:
  double parse_number(const Located& v) const {
    const char* begin = v.value.c_str();
    char* end = nullptr;
    const double x = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(x)) {
      fail(v.line, "expected a number, got '" + v.value + "'");
    }
    return x;
  }

  [[noreturn]] void missing(const std::string& key) const {
    const std::string section = key.substr(0, key.find('.'));
    const auto it = sections_.find(section);
    const int line = it == sections_.end() ? last_line_ : it->second;
    const std::string where = it == sections_.end() ? "file has no [" + section + "] section"
                                                    : "in [" + section + "] starting here";
    fail(line, "missing required key '" + key.substr(key.find('.') + 1) + "' (" + where + ")");
  }

  std::string source_;
  std::map<std::string, Located> values_;
  std::map<std::string, int> sections_;
  int last_line_;
};

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"riemann", {"h_minus", "h_plus", "mu", "u_plus"}},
      {"soliton", {"z", "z2", "side", "sigma", "offset", "method"}},
      {"solver",
       {"dx", "cfl", "limiter", "elliptic_bc", "t_end", "max_halvings", "ramp_width", "x_left", "x_right",
        "trail"}},
      {"output",
       {"dir", "output_every", "prominence_frac", "window_widths", "gap_widths", "clear_widths",
        "comparable_ratio"}},
  };
  return s;
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

RunConfig parse_config(std::istream& in, const std::string& source) {
  std::map<std::string, Located> values;
  std::map<std::string, int> sections;
  std::string section, raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, line_no, "malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (!schema().count(section)) throw ConfigError(source, line_no, "unknown section [" + section + "]");
      if (sections.count(section)) throw ConfigError(source, line_no, "duplicate section [" + section + "]");
      sections[section] = line_no;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(source, line_no, "key '" + key + "' outside any section");
    if (!schema().at(section).count(key)) {
      throw ConfigError(source, line_no, "unknown key '" + key + "' in [" + section + "]");
    }
    if (value.empty()) throw ConfigError(source, line_no, "empty value for '" + key + "'");
    const std::string full = section + "." + key;
    if (values.count(full)) {
      throw ConfigError(source, line_no,
                        "duplicate key '" + key + "' (first set on line " + std::to_string(values[full].line) + ")");
    }
    values[full] = {value, line_no};
  }

  RunConfig out;
  for (const auto& [k, v] : values) out.entries[k] = v.value;
  const Reader r(source, std::move(values), std::move(sections), line_no);
  auto& e = out.experiment;
  e.h_minus = r.required_number("riemann.h_minus");
  e.h_plus = r.required_number("riemann.h_plus");
  e.mu = r.branch("riemann.mu", 1, true);
  e.u_plus = r.number("riemann.u_plus", 0.0);

  if (r.has("soliton.z") && r.has("soliton.z2")) {
    r.fail(r.line_of("soliton.z2"), "give either z or z2, not both");
  }
  e.wave.z = r.has("soliton.z2") ? std::sqrt(std::max(0.0, r.number("soliton.z2", 0.0)))
                                 : r.number("soliton.z", 0.0);
  if (r.number("soliton.z2", 0.0) < 0) r.fail(r.line_of("soliton.z2"), "z2 must be non-negative");
  e.wave.side = r.parsed<Placement>("soliton.side", Placement::Minus, [](const std::string& s) {
    if (s == "minus") return Placement::Minus;
    if (s == "plus") return Placement::Plus;
    throw std::invalid_argument("expected 'minus' or 'plus', got '" + s + "'");
  });
  e.sigma = r.branch("soliton.sigma", 1);
  e.wave.offset = r.number("soliton.offset", 0.0);
  e.method = r.parsed<InvariantMethod>("soliton.method", InvariantMethod::Exact, parse_method);

  e.dx = r.number("solver.dx", e.dx);
  e.solver.cfl = r.number("solver.cfl", e.solver.cfl);
  e.solver.limiter = r.parsed<Limiter>("solver.limiter", Limiter::None, parse_limiter);
  e.solver.elliptic_bc =
      r.parsed<EllipticBoundary>("solver.elliptic_bc", e.solver.elliptic_bc, parse_elliptic_boundary);
  e.solver.t_end = r.number("solver.t_end", 0.0);
  const double halvings = r.number("solver.max_halvings", e.solver.max_halvings);
  if (halvings != std::floor(halvings) || halvings < 0) {
    r.fail(r.line_of("solver.max_halvings"), "max_halvings must be a non-negative integer");
  }
  e.solver.max_halvings = int(halvings);
  e.ramp_width = r.number("solver.ramp_width", e.ramp_width);
  e.x_left = r.number("solver.x_left", e.x_left);
  e.x_right = r.number("solver.x_right", e.x_right);
  e.trail = r.number("solver.trail", e.trail);

  out.output_dir = r.text("output.dir", "out");
  e.solver.output_every = r.number("output.output_every", 0.0);
  e.measure.prominence_frac = r.number("output.prominence_frac", e.measure.prominence_frac);
  e.measure.window_widths = r.number("output.window_widths", e.measure.window_widths);
  e.measure.gap_widths = r.number("output.gap_widths", e.measure.gap_widths);
  e.measure.clear_widths = r.number("output.clear_widths", e.measure.clear_widths);
  e.measure.comparable_ratio = r.number("output.comparable_ratio", e.measure.comparable_ratio);

  try {
    e.validate();
  } catch (const std::exception& ex) {
    throw ConfigError(source, 0, ex.what());
  }
  return out;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError(file.string(), 0, "cannot open file");
  return parse_config(in, file.string());
}

std::uint64_t config_hash(const std::map<std::string, std::string>& entries) {
  std::uint64_t h = 14695981039346656037ull;
  const auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const auto& [k, v] : entries) feed(k + "=" + v + "\n");
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sgnlab
