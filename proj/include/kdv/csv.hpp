#pragma once

// Minimal CSV I/O for the run artifacts. Numbers are written with %.17g so a
// parse round-trip reproduces every double exactly.

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace kdv::csv {

std::string format_number(double v);

class Writer {
 public:
  Writer(const std::filesystem::path& path, std::initializer_list<std::string_view> header);
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);

  template <class... Cells>
  void row(const Cells&... cells) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
    out_ << '\n';
  }

  void row(const std::vector<double>& cells);

 private:
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(const char* s) { return s; }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }

  std::ofstream out_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of `name` in the header; throws if absent.
  std::size_t column(std::string_view name) const;
  /// Numeric column by name.
  std::vector<double> numbers(std::string_view name) const;
};

/// Reads a header + rows file; throws kdv::Error naming the file on failure.
Table read(const std::filesystem::path& path);

/// Parses CSV text (header + rows).
Table parse(std::string_view text, std::string_view origin = "<text>");

}  // namespace kdv::csv
