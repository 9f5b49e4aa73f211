#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "transmission.hpp"

namespace mixdim {

// Flat key/value text: "section.key = value" lines, or "key = value" below a
// "[section]" header. '#' and ';' start comments.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static ConfigFile parse(const std::string& text) {
    ConfigFile cfg;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      auto s = strip(raw.substr(0, raw.find_first_of("#;")));
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']') throw ConfigError("line " + std::to_string(line) + ": unterminated section header");
        section = strip(s.substr(1, s.size() - 2));
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected key = value");
      auto key = strip(s.substr(0, eq));
      if (key.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key");
      if (!section.empty()) key = section + "." + key;
      if (cfg.entries_.count(key)) throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
      cfg.entries_[key] = {strip(s.substr(eq + 1)), line};
    }
    return cfg;
  }

  static ConfigFile load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    auto c = parse(ss.str());
    c.text_ = ss.str();
    return c;
  }

  const std::string& text() const { return text_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  double get_double(const std::string& key, double def) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? def : to_double(it->second.value, key, it->second.line);
  }
  int get_int(const std::string& key, int def) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return def;
    int v = 0;
    const auto& s = it->second.value;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) bad(key, it->second.line, s);
    return v;
  }
  bool get_bool(const std::string& key, bool def) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return def;
    const auto& s = it->second.value;
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    bad(key, it->second.line, s);
  }
  std::string get_string(const std::string& key, const std::string& def) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? def : it->second.value;
  }
  // Whitespace or comma separated complex numbers: "1.5", "2i", "0.3-1e-2i".
  std::vector<cplx> get_complex_list(const std::string& key, std::vector<cplx> def) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return def;
    std::vector<cplx> out;
    for (const auto& tok : tokens(it->second.value)) out.push_back(to_complex(tok, key, it->second.line));
    return out;
  }
  cplx get_complex(const std::string& key, cplx def) const {
    auto v = get_complex_list(key, {def});
    if (v.size() != 1) bad(key, entries_.at(key).line, entries_.at(key).value);
    return v[0];
  }
  std::vector<int> get_int_list(const std::string& key, std::vector<int> def) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return def;
    std::vector<int> out;
    for (const auto& tok : tokens(it->second.value)) {
      int v = 0;
      auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size()) bad(key, it->second.line, tok);
      out.push_back(v);
    }
    return out;
  }

 private:
  static std::string strip(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    return s.substr(a, s.find_last_not_of(" \t\r\n") - a + 1);
  }
  static std::vector<std::string> tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',' || c == ' ' || c == '\t') {
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
  }
  [[noreturn]] static void bad(const std::string& key, int line, const std::string& v) {
    throw ConfigError("line " + std::to_string(line) + ": bad value '" + v + "' for key '" + key + "'");
  }
  static double to_double(const std::string& s, const std::string& key, int line) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) bad(key, line, s);
    return v;
  }
  static cplx to_complex(const std::string& s, const std::string& key, int line) {
    if (s.empty()) bad(key, line, s);
    if (s.back() != 'i') return to_double(s, key, line);
    const auto body = s.substr(0, s.size() - 1);
    // split at the last sign that is not an exponent sign or the leading sign
    std::size_t split = std::string::npos;
    for (std::size_t i = body.size(); i-- > 1;)
      if ((body[i] == '+' || body[i] == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
        split = i;
        break;
      }
    if (split == std::string::npos) {
      if (body.empty() || body == "+" || body == "-") return cplx(0, body == "-" ? -1 : 1);
      return cplx(0, to_double(body, key, line));
    }
    auto im = body.substr(split);
    if (im.front() == '+') im.erase(0, 1);
    const double imv = (im.empty() || im == "-") ? (im == "-" ? -1.0 : 1.0) : to_double(im, key, line);
    return cplx(to_double(body.substr(0, split), key, line), imv);
  }

  std::map<std::string, Entry> entries_;
  std::string text_;
};

// Everything a CLI run needs, read from one ConfigFile.
struct RunConfig {
  TreeParams tree;
  double radius = 1;
  int interface_level = 3;
  int mode_cutoff = -1;  // symbol cutoff; oversampling * p^N when negative
  TransmissionConfig transmission;
  std::vector<int> levels;  // convergence study
  int pencil_count = -1;
  std::string output_dir = ".";
  std::uint64_t seed = 12345;
  bool allow_large = false;
};

namespace detail {

inline bool known_key(const std::string& k) {
  static const std::vector<std::string> fixed = {
      "tree.p", "tree.ell", "tree.omega", "tree.L0", "tree.omega0", "tree.N1",
      "interface.radius", "interface.N", "interface.mode_cutoff",
      "transmission.alpha1", "transmission.alpha0", "transmission.c_root", "transmission.source_depth",
      "transmission.chart_level", "transmission.oversampling", "transmission.levels",
      "transmission.pencil_count",
      "source.tree.coeffs", "source.tree.max_generation",
      "source.exterior.R_max",
      "run.output_dir", "run.seed", "run.allow_large"};
  for (const auto& f : fixed)
    if (k == f) return true;
  // tree.override.<n>.<k>.length|weight and source.exterior.mode.<k>.min_power|coeffs
  auto parts = [](const std::string& s) {
    std::vector<std::string> v;
    std::string cur;
    for (char c : s) {
      if (c == '.') {
        v.push_back(cur);
        cur.clear();
      } else {
        cur += c;
      }
    }
    v.push_back(cur);
    return v;
  };
  auto is_int = [](const std::string& s) {
    int v;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return !s.empty() && ec == std::errc() && p == s.data() + s.size();
  };
  const auto v = parts(k);
  if (v.size() == 5 && v[0] == "tree" && v[1] == "override" && is_int(v[2]) && is_int(v[3]) &&
      (v[4] == "length" || v[4] == "weight"))
    return true;
  if (v.size() == 5 && v[0] == "source" && v[1] == "exterior" && v[2] == "mode" && is_int(v[3]) &&
      (v[4] == "min_power" || v[4] == "coeffs"))
    return true;
  return false;
}

}  // namespace detail

inline RunConfig run_config(const ConfigFile& f) {
  for (const auto& [k, e] : f.entries())
    if (!detail::known_key(k)) throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + k + "'");
  RunConfig rc;
  auto& t = rc.tree;
  t.p = f.get_int("tree.p", t.p);
  t.ell = f.get_double("tree.ell", t.ell);
  t.omega = f.get_double("tree.omega", t.omega);
  t.L0 = f.get_double("tree.L0", t.L0);
  t.omega0 = f.get_double("tree.omega0", t.omega0);
  t.N1 = f.get_int("tree.N1", t.N1);

  std::map<int, LaurentPolynomial> modes;
  for (const auto& [k, e] : f.entries()) {
    if (k.rfind("tree.override.", 0) == 0) {
      int n = 0, idx = 0;
      char what[8] = {};
      std::sscanf(k.c_str(), "tree.override.%d.%d.%7s", &n, &idx, what);
      const double v = f.get_double(k, 0);
      (std::string(what) == "length" ? t.length_overrides : t.weight_overrides)[EdgeRef{n, idx}] = v;
    } else if (k.rfind("source.exterior.mode.", 0) == 0) {
      int m = 0;
      char what[16] = {};
      std::sscanf(k.c_str(), "source.exterior.mode.%d.%15s", &m, what);
      if (std::string(what) == "min_power")
        modes[m].min_power = f.get_int(k, 0);
      else
        modes[m].c = f.get_complex_list(k, {});
    }
  }

  rc.radius = f.get_double("interface.radius", rc.radius);
  rc.interface_level = f.get_int("interface.N", rc.interface_level);
  rc.mode_cutoff = f.get_int("interface.mode_cutoff", rc.mode_cutoff);

  auto& tc = rc.transmission;
  tc.tree = t;
  tc.radius = rc.radius;
  tc.level = rc.interface_level;
  tc.alpha1 = f.get_complex("transmission.alpha1", tc.alpha1);
  tc.alpha0 = f.get_complex_list("transmission.alpha0", tc.alpha0);
  tc.c_root = f.get_complex("transmission.c_root", tc.c_root);
  tc.source_depth = f.get_int("transmission.source_depth", tc.source_depth);
  tc.chart_level = f.get_int("transmission.chart_level", tc.chart_level);
  tc.oversampling = f.get_int("transmission.oversampling", tc.oversampling);
  tc.tree_source.coeffs = f.get_complex_list("source.tree.coeffs", {});
  tc.tree_source.max_generation = f.get_int("source.tree.max_generation", -1);
  if (!modes.empty()) {
    tc.exterior_source.R_max = f.get_double("source.exterior.R_max", 2 * rc.radius);
    tc.exterior_source.modes = std::move(modes);
  }
  rc.levels = f.get_int_list("transmission.levels", {});
  rc.pencil_count = f.get_int("transmission.pencil_count", -1);
  if (rc.mode_cutoff >= 0) {
    const auto P = ipow(t.p, rc.interface_level);
    if (rc.mode_cutoff < tc.oversampling * P)
      throw CutoffTooSmall("interface.mode_cutoff " + std::to_string(rc.mode_cutoff) + " below " +
                           std::to_string(tc.oversampling) + " x " + std::to_string(P));
  }

  rc.output_dir = f.get_string("run.output_dir", rc.output_dir);
  rc.seed = std::uint64_t(f.get_int("run.seed", int(rc.seed)));
  rc.allow_large = f.get_bool("run.allow_large", false);
  tc.assembly.allow_large = rc.allow_large;
  return rc;
}

}  // namespace mixdim
