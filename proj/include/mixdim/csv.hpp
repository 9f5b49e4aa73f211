#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace mixdim {

// 17 significant digits, '.' separator regardless of locale.
inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, p);
}
inline std::string format_number(std::int64_t v) { return std::to_string(v); }
inline std::string format_number(int v) { return std::to_string(v); }

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Writes to "<path>.tmp" and renames on close.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path) : path_(std::move(path)), tmp_(path_.string() + ".tmp") {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw ConfigError("cannot write '" + tmp_.string() + "'");
  }
  AtomicFile(const AtomicFile&) = delete;
  ~AtomicFile() {
    if (out_.is_open()) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }
  std::ofstream& stream() { return out_; }
  void commit() {
    out_.close();
    if (!out_) throw ConfigError("write to '" + tmp_.string() + "' failed");
    std::filesystem::rename(tmp_, path_);
  }

 private:
  std::filesystem::path path_, tmp_;
  std::ofstream out_;
};

class CsvWriter {
 public:
  CsvWriter(std::filesystem::path path, const std::vector<std::string>& header) : file_(std::move(path)) {
    row_strings(header);
  }
  template <class... T>
  void row(const T&... v) {
    std::vector<std::string> cells{format_number(v)...};
    row_strings(cells);
  }
  void row_strings(const std::vector<std::string>& cells) {
    auto& o = file_.stream();
    for (std::size_t i = 0; i < cells.size(); ++i) o << (i ? "," : "") << cells[i];
    o << '\n';
  }
  void commit() { file_.commit(); }

 private:
  AtomicFile file_;
};

// key=value lines.
inline void write_manifest(const std::filesystem::path& path,
                           const std::vector<std::pair<std::string, std::string>>& kv) {
  AtomicFile f(path);
  for (const auto& [k, v] : kv) f.stream() << k << '=' << v << '\n';
  f.commit();
}

}  // namespace mixdim
