#pragma once

// Minimal CSV emission.  Numbers go out with 12 significant digits so
// reruns are byte-comparable; files are written to a temp name and
// renamed into place so a crash never leaves a half-written table.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mg1::csv {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class Writer {
 public:
  Writer(std::filesystem::path path, std::vector<std::string> columns)
      : path_(std::move(path)), tmp_(path_), n_cols_(columns.size()) {
    tmp_ += ".tmp";
    if (n_cols_ == 0) throw std::invalid_argument("csv: empty header");
    out_.open(tmp_, std::ios::trunc);
    if (!out_) throw std::runtime_error("csv: cannot open " + tmp_.string());
    for (std::size_t i = 0; i < columns.size(); ++i)
      out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
  }

  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  ~Writer() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  void row(std::span<const std::string> cells) {
    if (cells.size() != n_cols_)
      throw std::invalid_argument("csv: row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i)
      out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

  // Convenience: doubles are formatted, integers printed exactly, strings
  // passed through.
  template <class... Ts>
  void row(const Ts&... cells) {
    std::vector<std::string> v;
    v.reserve(sizeof...(cells));
    (v.push_back(cell(cells)), ...);
    row(std::span<const std::string>(v));
  }

  void commit() {
    if (committed_) return;
    out_.flush();
    if (!out_) throw std::runtime_error("csv: write failed on " + tmp_.string());
    out_.close();
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  static std::string cell(double v) { return fmt(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(unsigned long v) { return std::to_string(v); }
  static std::string cell(unsigned long long v) { return std::to_string(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }

  std::filesystem::path path_, tmp_;
  std::ofstream out_;
  std::size_t n_cols_;
  bool committed_ = false;
};

}  // namespace mg1::csv
