#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ghrl::env {

// Hours since 1970-01-01T00:00 UTC.
using Hour = std::int64_t;

struct CivilTime {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;
  unsigned hour = 0;
};

Hour to_hour(int year, unsigned month, unsigned day, unsigned hour = 0);
CivilTime to_civil(Hour h);
// "YYYY-MM-DDTHH:00:00"
std::string format_hour(Hour h);
// Accepts "YYYY-MM-DDTHH:MM[:SS][Z]" or a space separator; minutes and seconds must be zero.
bool parse_hour(const std::string& text, Hour& out);

struct WeatherRecord {
  double radiation = 0.0;    // W/m^2
  double temperature = 0.0;  // degC
  double rh = 0.0;           // %
};

enum class RadiationUnits { kWattPerM2, kJoulePerCm2PerHour };

// Contiguous hourly outdoor weather.
class WeatherSeries {
 public:
  WeatherSeries() = default;
  WeatherSeries(Hour start, std::vector<WeatherRecord> records);

  Hour start() const { return start_; }
  // One past the last covered hour.
  Hour end() const { return start_ + static_cast<Hour>(records_.size()); }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  bool covers(Hour first, Hour last_inclusive) const {
    return first >= start_ && last_inclusive < end() && first <= last_inclusive;
  }
  // Throws WeatherGapError outside coverage.
  const WeatherRecord& at(Hour h) const;
  const std::vector<WeatherRecord>& records() const { return records_; }

 private:
  Hour start_ = 0;
  std::vector<WeatherRecord> records_;
};

// CSV with header `timestamp,radiation_wm2,temp_c,rh_pct`; `#` lines are comments.
WeatherSeries parse_weather(std::istream& in, RadiationUnits units = RadiationUnits::kWattPerM2);
WeatherSeries load_weather(const std::filesystem::path& path,
                           RadiationUnits units = RadiationUnits::kWattPerM2);
void write_weather(std::ostream& out, const WeatherSeries& series);

// Deterministic synthetic North-Sea-coast weather covering [first, last).
// Radiation follows a clear-sky solar elevation curve scaled by a daily
// cloudiness factor; temperature is a seasonal plus diurnal sinusoid with an
// autoregressive daily anomaly; humidity anti-correlates with the diurnal cycle.
WeatherSeries synthesize_weather(Hour first, Hour last, std::uint64_t seed);

}  // namespace ghrl::env
