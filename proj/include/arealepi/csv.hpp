#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace arealepi::csv {

/// One parsed data row with its 1-based line number in the source stream.
struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Reads a comma-separated stream with a mandatory header. Fields are trimmed;
/// blank lines and lines starting with '#' are skipped. Quoting is not
/// supported. The header must start with `required` (in order); extra trailing
/// columns are allowed and reported through `header()`.
class Reader {
 public:
  Reader(std::istream& in, std::vector<std::string> required);

  const std::vector<std::string>& header() const { return header_; }
  /// Column position of `name`, or -1 if absent.
  int column(std::string_view name) const;
  bool next(Row& row);

 private:
  std::istream& in_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

std::vector<std::string> split(std::string_view line);
std::string trim(std::string_view s);

double parse_double(const std::string& s, std::size_t line, std::string_view what);
long long parse_int(const std::string& s, std::size_t line, std::string_view what);

}  // namespace arealepi::csv
