#include "ghrl/env/weather.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ghrl/errors.hpp"

namespace ghrl::env {

Hour to_hour(int year, unsigned month, unsigned day, unsigned hour) {
  using namespace std::chrono;
  const sys_days d{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  return static_cast<Hour>(d.time_since_epoch().count()) * 24 + hour;
}

CivilTime to_civil(Hour h) {
  using namespace std::chrono;
  const Hour day_index = h >= 0 ? h / 24 : (h - 23) / 24;
  const year_month_day ymd{sys_days{days{day_index}}};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
          static_cast<unsigned>(ymd.day()), static_cast<unsigned>(h - day_index * 24)};
}

std::string format_hour(Hour h) {
  const CivilTime c = to_civil(h);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02u:00:00", c.year, c.month, c.day, c.hour);
  return buf;
}

bool parse_hour(const std::string& text, Hour& out) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int consumed = 0;
  const int n = std::sscanf(text.c_str(), "%4d-%2u-%2u%c%2u:%2u%n", &y, &mo, &d, &sep, &h, &mi,
                            &consumed);
  if (n != 6 || (sep != 'T' && sep != ' ')) return false;
  std::string rest = text.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest[0] == ':') {
    int more = 0;
    if (std::sscanf(rest.c_str(), ":%2u%n", &s, &more) != 1) return false;
    rest = rest.substr(static_cast<std::size_t>(more));
  }
  if (rest == "Z") rest.clear();
  if (!rest.empty() || mi != 0 || s != 0 || h > 23) return false;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo},
                                        std::chrono::day{d}};
  if (!ymd.ok()) return false;
  out = to_hour(y, mo, d, h);
  return true;
}

WeatherSeries::WeatherSeries(Hour start, std::vector<WeatherRecord> records)
    : start_(start), records_(std::move(records)) {}

const WeatherRecord& WeatherSeries::at(Hour h) const {
  if (h < start_ || h >= end()) {
    throw WeatherGapError("no weather record for " + format_hour(h));
  }
  return records_[static_cast<std::size_t>(h - start_)];
}

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_double(const std::string& field, double& out) {
  const std::string t = trim(field);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

}  // namespace

WeatherSeries parse_weather(std::istream& in, RadiationUnits units) {
  static const std::string kHeader = "timestamp,radiation_wm2,temp_c,rh_pct";
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  Hour start = 0;
  Hour previous = 0;
  std::vector<WeatherRecord> records;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!have_header) {
      if (t != kHeader) throw WeatherFormatError(lineno, "expected header '" + kHeader + "'");
      have_header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 4) throw WeatherFormatError(lineno, "expected 4 fields");
    Hour h = 0;
    if (!parse_hour(trim(fields[0]), h)) {
      throw WeatherFormatError(lineno, "bad hourly ISO-8601 timestamp '" + fields[0] + "'");
    }
    WeatherRecord r;
    if (!parse_double(fields[1], r.radiation) || !parse_double(fields[2], r.temperature) ||
        !parse_double(fields[3], r.rh)) {
      throw WeatherFormatError(lineno, "non-numeric value");
    }
    if (units == RadiationUnits::kJoulePerCm2PerHour) r.radiation *= 1e4 / 3600.0;
    if (r.radiation < 0.0) throw WeatherFormatError(lineno, "negative radiation");
    if (r.rh < 0.0) throw WeatherFormatError(lineno, "negative relative humidity");
    if (records.empty()) {
      start = h;
    } else if (h <= previous) {
      throw WeatherGapError("line " + std::to_string(lineno) + ": timestamp " + format_hour(h) +
                            " not after " + format_hour(previous));
    } else if (h != previous + 1) {
      throw WeatherGapError("line " + std::to_string(lineno) + ": gap between " +
                            format_hour(previous) + " and " + format_hour(h));
    }
    previous = h;
    records.push_back(r);
  }
  if (!have_header) throw WeatherFormatError(lineno, "missing header");
  if (records.empty()) throw WeatherFormatError(lineno, "no weather records");
  return WeatherSeries(start, std::move(records));
}

WeatherSeries load_weather(const std::filesystem::path& path, RadiationUnits units) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open weather file " + path.string());
  return parse_weather(in, units);
}

void write_weather(std::ostream& out, const WeatherSeries& series) {
  out << "timestamp,radiation_wm2,temp_c,rh_pct\n";
  char buf[128];
  for (std::size_t i = 0; i < series.size(); ++i) {
    const WeatherRecord& r = series.records()[i];
    std::snprintf(buf, sizeof buf, "%s,%.3f,%.3f,%.2f\n",
                  format_hour(series.start() + static_cast<Hour>(i)).c_str(), r.radiation,
                  r.temperature, r.rh);
    out << buf;
  }
}

namespace {

// splitmix64; portable so fixtures regenerate identically everywhere.
class PortableRng {
 public:
  explicit PortableRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double normal() {
    const double u1 = std::max(uniform(), 1e-300);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

int day_of_year(Hour h) {
  const CivilTime c = to_civil(h);
  return static_cast<int>((h - to_hour(c.year, 1, 1)) / 24) + 1;
}

}  // namespace

WeatherSeries synthesize_weather(Hour first, Hour last, std::uint64_t seed) {
  constexpr double kLatitude = 52.1 * std::numbers::pi / 180.0;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  PortableRng rng(seed);
  std::vector<WeatherRecord> records;
  records.reserve(static_cast<std::size_t>(std::max<Hour>(0, last - first)));

  double temp_anomaly = 0.0;
  double cloudiness = 0.5;
  double rh_anomaly = 0.0;
  Hour current_day = -1;
  for (Hour h = first; h < last; ++h) {
    const Hour day = h >= 0 ? h / 24 : (h - 23) / 24;
    if (day != current_day) {
      current_day = day;
      temp_anomaly = 0.7 * temp_anomaly + 2.0 * rng.normal();
      cloudiness = std::clamp(0.6 * cloudiness + 0.4 * rng.uniform(), 0.05, 1.0);
      rh_anomaly = std::clamp(0.6 * rh_anomaly + 4.0 * rng.normal(), -15.0, 15.0);
    }
    const int doy = day_of_year(h);
    const double hour_of_day = static_cast<double>(h - day * 24) + 0.5;

    const double declination = 23.44 * std::numbers::pi / 180.0 * std::sin(kTwoPi * (doy - 81) / 365.0);
    const double hour_angle = kTwoPi * (hour_of_day - 12.0) / 24.0;
    const double sin_elevation = std::sin(kLatitude) * std::sin(declination) +
                                 std::cos(kLatitude) * std::cos(declination) * std::cos(hour_angle);
    const double clear_sky = sin_elevation > 0.0 ? 1000.0 * std::pow(sin_elevation, 1.15) : 0.0;
    const double radiation = clear_sky * (1.0 - 0.75 * cloudiness);

    const double seasonal = 10.5 - 7.0 * std::cos(kTwoPi * (doy - 20) / 365.0);
    const double diurnal = (2.0 + 2.0 * (1.0 - cloudiness)) * std::cos(kTwoPi * (hour_of_day - 14.0) / 24.0);
    const double temperature = seasonal + diurnal + temp_anomaly + 0.3 * rng.normal();

    const double rh = std::clamp(84.0 + rh_anomaly - 2.5 * diurnal + 1.0 * rng.normal(), 35.0, 100.0);

    records.push_back({std::round(radiation * 1000.0) / 1000.0,
                       std::round(temperature * 1000.0) / 1000.0, std::round(rh * 100.0) / 100.0});
  }
  return WeatherSeries(first, std::move(records));
}

}  // namespace ghrl::env
