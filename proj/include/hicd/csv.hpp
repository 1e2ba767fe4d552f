#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hicd::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header field; throws std::out_of_range when absent.
  std::size_t column(std::string_view name) const;
};

/// Comma-delimited, optional double-quote quoting ("" escapes a quote), CRLF tolerated.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text);

/// Shortest round-trip representation; identical inputs give identical text.
std::string format_number(double v);

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& os_;
};

}  // namespace hicd::csv
