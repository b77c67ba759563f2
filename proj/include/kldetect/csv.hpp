#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "kldetect/error.hpp"

namespace kldetect {

// RFC-4180 record reader: quoted fields, doubled quotes, CR/LF and
// embedded newlines inside quotes.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // reads one record into fields; returns false at end of input
  bool next_record(std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    int c;
    while ((c = in_.get()) != EOF) {
      saw_any = true;
      char ch = static_cast<char>(c);
      if (in_quotes) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            in_quotes = false;
          }
        } else {
          field.push_back(ch);
        }
      } else if (ch == '"') {
        in_quotes = true;
      } else if (ch == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (ch == '\r') {
        if (in_.peek() == '\n') in_.get();
        fields.push_back(std::move(field));
        return true;
      } else if (ch == '\n') {
        fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(ch);
      }
    }
    if (!saw_any) return false;
    fields.push_back(std::move(field));
    return true;
  }

 private:
  std::istream& in_;
};

inline std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// case-insensitive, whitespace- and underscore-insensitive column key;
// the dataset mixes spellings like "Dst Port" and "Dst_Port"
inline std::string normalize_column_name(std::string_view name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name) {
    if (c == ' ' || c == '\t' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

// Numeric cell parse. Unparseable and empty cells become NaN so the
// sanitize pass can treat them uniformly; "inf"/"infinity" spellings
// (as found in CICFlowMeter exports) map to +/-inf.
inline double parse_cell(std::string_view raw) {
  std::string t = trim(raw);
  if (t.empty()) return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec == std::errc() && ptr == t.data() + t.size()) return value;
  std::string low;
  for (char c : t) low.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  bool negative = !low.empty() && low[0] == '-';
  std::string_view body = low;
  if (!low.empty() && (low[0] == '+' || low[0] == '-')) body = body.substr(1);
  if (body == "inf" || body == "infinity") {
    return negative ? -std::numeric_limits<double>::infinity()
                    : std::numeric_limits<double>::infinity();
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// shortest representation that round-trips exactly; keeps CSV/JSON
// artifacts byte-stable across runs
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

inline std::string csv_escape(std::string_view field) {
  bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

}  // namespace kldetect
