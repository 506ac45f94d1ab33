#include "arealepi/csv.hpp"

#include <charconv>

#include "arealepi/error.hpp"

namespace arealepi::csv {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

Reader::Reader(std::istream& in, std::vector<std::string> required) : in_(in) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    // Tolerate a UTF-8 byte order mark on the header line.
    if (line_ == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    header_ = split(t);
    break;
  }
  if (header_.size() < required.size()) {
    throw Error(ErrorKind::InvalidInput, "missing or short CSV header; expected '" +
                                             [&] {
                                               std::string h;
                                               for (const auto& r : required) h += (h.empty() ? "" : ",") + r;
                                               return h;
                                             }() +
                                             "'");
  }
  for (std::size_t i = 0; i < required.size(); ++i) {
    if (header_[i] != required[i]) {
      throw Error(ErrorKind::InvalidInput, "CSV header column " + std::to_string(i + 1) + " is '" +
                                               header_[i] + "', expected '" + required[i] + "'");
    }
  }
}

int Reader::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return static_cast<int>(i);
  }
  return -1;
}

bool Reader::next(Row& row) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    row.line = line_;
    row.fields = split(t);
    if (row.fields.size() < header_.size()) {
      throw Error(ErrorKind::InvalidInput, "line " + std::to_string(line_) + ": expected " +
                                               std::to_string(header_.size()) + " fields, got " +
                                               std::to_string(row.fields.size()));
    }
    return true;
  }
  return false;
}

double parse_double(const std::string& s, std::size_t line, std::string_view what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::InvalidInput,
              "line " + std::to_string(line) + ": cannot parse " + std::string(what) + " '" + s + "'");
}

long long parse_int(const std::string& s, std::size_t line, std::string_view what) {
  long long v = 0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || s.empty()) {
    throw Error(ErrorKind::InvalidInput,
                "line " + std::to_string(line) + ": cannot parse " + std::string(what) + " '" + s + "'");
  }
  return v;
}

}  // namespace arealepi::csv
