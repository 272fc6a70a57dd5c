#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace vtrackit {

// Canonical float text: 9 significant digits, "-0" normalized away. All
// on-disk artifacts use this so identical runs produce identical bytes.
inline std::string fmt_g9(double v) {
  if (v == 0.0) v = 0.0;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// One CSV line honoring double-quoted fields.
std::vector<std::string> split_csv_line(const std::string& line);

// Quotes a field when it contains commas or quotes.
std::string csv_escape(const std::string& field);

}  // namespace vtrackit
