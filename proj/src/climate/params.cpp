#include "ghrl/climate/params.hpp"

#include <cstdio>
#include <sstream>

#include "ghrl/errors.hpp"

namespace ghrl::climate {

ModelParams::ModelParams() {
  auto& p = *this;
  p(1, 1) = 0.544;
  p(1, 2) = 2.65e-7;
  p(1, 3) = 53.0;
  p(1, 4) = 3.55e-9;
  p(1, 5) = 5.11e-6;
  p(1, 6) = 2.3e-4;
  p(1, 7) = 6.29e-4;
  p(1, 8) = 5.2e-5;

  p(2, 1) = 4.1;
  p(2, 2) = 4.87e-7;
  p(2, 3) = 7.5e-6;
  p(2, 4) = 8.31;
  p(2, 5) = 273.15;
  p(2, 6) = 101325.0;
  p(2, 7) = 0.044;

  p(3, 1) = 3.0e4;
  p(3, 2) = 1290.0;
  p(3, 3) = 6.1;
  p(3, 4) = 0.2;

  p(4, 1) = 4.1;
  p(4, 2) = 0.0036;
  p(4, 3) = 9348.0;
  p(4, 4) = 8314.0;
  p(4, 5) = 273.15;
  p(4, 6) = 17.4;
  p(4, 7) = 239.0;
  p(4, 8) = 17.269;
  p(4, 9) = 238.3;

  p(5, 1) = 0.05;
  p(5, 2) = 3.0e-6;
  p(5, 3) = 55.0;
  p(5, 4) = 2.5e-2;
}

std::string ModelParams::dump() const {
  std::string out;
  char line[96];
  for (int i = 1; i <= kGroups; ++i) {
    for (int j = 1; j <= kGroupSizes[i - 1]; ++j) {
      std::snprintf(line, sizeof line, "p_{%d,%d} = %.17g\n", i, j, (*this)(i, j));
      out += line;
    }
  }
  return out;
}

ModelParams ModelParams::parse(const std::string& text) {
  ModelParams p;
  std::array<std::array<bool, 9>, kGroups> seen{};
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    int i = 0;
    int j = 0;
    double v = 0.0;
    if (std::sscanf(line.c_str(), "p_{%d,%d} = %lf", &i, &j, &v) != 3 || !defined(i, j)) {
      throw FormatError("params line " + std::to_string(lineno) + ": cannot parse '" + line + "'");
    }
    if (!(v > 0.0)) {
      throw FormatError("params line " + std::to_string(lineno) + ": value must be positive");
    }
    p(i, j) = v;
    seen[i - 1][j - 1] = true;
  }
  for (int i = 1; i <= kGroups; ++i) {
    for (int j = 1; j <= kGroupSizes[i - 1]; ++j) {
      if (!seen[i - 1][j - 1]) {
        throw FormatError("params: missing p_{" + std::to_string(i) + "," + std::to_string(j) + "}");
      }
    }
  }
  return p;
}

std::uint64_t ModelParams::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace ghrl::climate
