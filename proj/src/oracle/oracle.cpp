#include "ghrl/oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ghrl/climate/model.hpp"
#include "ghrl/errors.hpp"

namespace ghrl::oracle {

namespace {

std::size_t lattice_count(double lo, double hi, double step) {
  return static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
}

}  // namespace

double Axis::at(std::size_t i) const {
  if (nodes == 1) return min;
  return min + (max - min) * static_cast<double>(i) / static_cast<double>(nodes - 1);
}

void GridSpec::validate() const {
  for (const Axis* a : {&radiation, &dry_weight}) {
    if (a->nodes < 2 || !(a->max > a->min)) throw ConfigError("grid axis needs >= 2 nodes and max > min");
  }
  if (!(dry_weight.min > 0.0)) throw ConfigError("grid dry weight must be positive");
  if (radiation.min < 0.0) throw ConfigError("grid radiation must be non-negative");
  if (!(temp_step > 0.0) || !(temp_max >= temp_min)) throw ConfigError("bad temperature search range");
  if (!(co2_step > 0.0) || !(co2_max >= co2_min) || co2_min < 0.0) {
    throw ConfigError("bad CO2 search range");
  }
}

ClimateTarget best_climate(double radiation, double dry_weight, const GridSpec& spec,
                           const climate::ModelParams& params) {
  const std::size_t nt = lattice_count(spec.temp_min, spec.temp_max, spec.temp_step);
  const std::size_t nc = lattice_count(spec.co2_min, spec.co2_max, spec.co2_step);
  ClimateTarget best{spec.temp_min, spec.co2_min};
  double best_rate = -INFINITY;
  // Strict improvement only, scanning T then CO2 upward, keeps the lowest tie.
  for (std::size_t i = 0; i < nt; ++i) {
    const double t = spec.temp_min + static_cast<double>(i) * spec.temp_step;
    const double per_ppm = climate::ppm_to_density(t, 1.0, params);
    for (std::size_t j = 0; j < nc; ++j) {
      const double c = spec.co2_min + static_cast<double>(j) * spec.co2_step;
      const double rate = climate::growth_rate(dry_weight, per_ppm * c, t, radiation, params);
      if (rate > best_rate) {
        best_rate = rate;
        best = {t, c};
      }
    }
  }
  return best;
}

OptimalClimateTable::OptimalClimateTable(GridSpec spec, std::uint64_t params_hash,
                                         std::vector<ClimateTarget> nodes)
    : spec_(spec), params_hash_(params_hash), nodes_(std::move(nodes)) {
  if (nodes_.size() != spec_.radiation.nodes * spec_.dry_weight.nodes) {
    throw ShapeError("optimal table: node count does not match grid");
  }
}

const ClimateTarget& OptimalClimateTable::node(std::size_t ir, std::size_t iw) const {
  return nodes_.at(ir * spec_.dry_weight.nodes + iw);
}

namespace {

// Cell index and fraction on a uniform axis, clamped to its range.
std::pair<std::size_t, double> locate(const Axis& a, double x) {
  const double pos = (std::clamp(x, a.min, a.max) - a.min) / (a.max - a.min) *
                     static_cast<double>(a.nodes - 1);
  const auto i = std::min(static_cast<std::size_t>(pos), a.nodes - 2);
  return {i, pos - static_cast<double>(i)};
}

}  // namespace

ClimateTarget OptimalClimateTable::lookup(double radiation, double dry_weight) const {
  if (nodes_.empty()) throw UsageError("optimal table is empty");
  const auto [ir, fr] = locate(spec_.radiation, radiation);
  const auto [iw, fw] = locate(spec_.dry_weight, dry_weight);
  const ClimateTarget& a = node(ir, iw);
  const ClimateTarget& b = node(ir, iw + 1);
  const ClimateTarget& c = node(ir + 1, iw);
  const ClimateTarget& d = node(ir + 1, iw + 1);
  auto mix = [&](double va, double vb, double vc, double vd) {
    return (1 - fr) * ((1 - fw) * va + fw * vb) + fr * ((1 - fw) * vc + fw * vd);
  };
  return {mix(a.temp, b.temp, c.temp, d.temp), mix(a.co2, b.co2, c.co2, d.co2)};
}

bool operator==(const OptimalClimateTable& a, const OptimalClimateTable& b) {
  if (!(a.spec_ == b.spec_) || a.params_hash_ != b.params_hash_ ||
      a.nodes_.size() != b.nodes_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    if (a.nodes_[i].temp != b.nodes_[i].temp || a.nodes_[i].co2 != b.nodes_[i].co2) return false;
  }
  return true;
}

namespace {
constexpr const char* kMagic = "ghrl-optimal-climate-table";
constexpr int kVersion = 1;
}  // namespace

void OptimalClimateTable::write(std::ostream& out) const {
  char buf[160];
  out << kMagic << ' ' << kVersion << '\n';
  std::snprintf(buf, sizeof buf, "params_hash %016llx\n",
                static_cast<unsigned long long>(params_hash_));
  out << buf;
  std::snprintf(buf, sizeof buf, "radiation %.17g %.17g %zu\n", spec_.radiation.min,
                spec_.radiation.max, spec_.radiation.nodes);
  out << buf;
  std::snprintf(buf, sizeof buf, "dry_weight %.17g %.17g %zu\n", spec_.dry_weight.min,
                spec_.dry_weight.max, spec_.dry_weight.nodes);
  out << buf;
  std::snprintf(buf, sizeof buf, "temp_search %.17g %.17g %.17g\n", spec_.temp_min,
                spec_.temp_max, spec_.temp_step);
  out << buf;
  std::snprintf(buf, sizeof buf, "co2_search %.17g %.17g %.17g\n", spec_.co2_min, spec_.co2_max,
                spec_.co2_step);
  out << buf;
  for (const ClimateTarget& n : nodes_) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", n.temp, n.co2);
    out << buf;
  }
}

void OptimalClimateTable::save(const std::filesystem::path& path) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw DataError("cannot write " + tmp.string());
    write(out);
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

OptimalClimateTable OptimalClimateTable::read(std::istream& in,
                                              const climate::ModelParams& params) {
  std::string magic, key;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw FormatError("not an optimal-climate table");
  if (version != kVersion) throw FormatError("unsupported table version " + std::to_string(version));
  auto expect = [&](const char* name) {
    if (!(in >> key) || key != name) throw FormatError(std::string("table header: expected ") + name);
  };
  std::string hash_text;
  expect("params_hash");
  in >> hash_text;
  const std::uint64_t hash = std::stoull(hash_text, nullptr, 16);
  if (hash != params.hash()) {
    throw FormatError("table was built for a different parameter set (hash " + hash_text + ")");
  }
  GridSpec spec;
  expect("radiation");
  in >> spec.radiation.min >> spec.radiation.max >> spec.radiation.nodes;
  expect("dry_weight");
  in >> spec.dry_weight.min >> spec.dry_weight.max >> spec.dry_weight.nodes;
  expect("temp_search");
  in >> spec.temp_min >> spec.temp_max >> spec.temp_step;
  expect("co2_search");
  in >> spec.co2_min >> spec.co2_max >> spec.co2_step;
  if (!in) throw FormatError("table header is malformed");
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("table header: ") + e.what());
  }
  std::vector<ClimateTarget> nodes(spec.radiation.nodes * spec.dry_weight.nodes);
  for (ClimateTarget& n : nodes) {
    if (!(in >> n.temp >> n.co2)) throw FormatError("table is truncated");
  }
  return OptimalClimateTable(spec, hash, std::move(nodes));
}

OptimalClimateTable OptimalClimateTable::load(const std::filesystem::path& path,
                                              const climate::ModelParams& params) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read(in, params);
}

OptimalClimateTable build_optimal_table(const climate::ModelParams& params, const GridSpec& spec) {
  spec.validate();
  const std::size_t nr = spec.radiation.nodes, nw = spec.dry_weight.nodes;
  std::vector<ClimateTarget> nodes(nr * nw);
  const auto total = static_cast<std::ptrdiff_t>(nr * nw);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    const auto i = static_cast<std::size_t>(k);
    nodes[i] = best_climate(spec.radiation.at(i / nw), spec.dry_weight.at(i % nw), spec, params);
  }
  return OptimalClimateTable(spec, params.hash(), std::move(nodes));
}

namespace reference {
OptimalClimateTable build_optimal_table(const climate::ModelParams& params, const GridSpec& spec) {
  spec.validate();
  std::vector<ClimateTarget> nodes;
  for (std::size_t ir = 0; ir < spec.radiation.nodes; ++ir) {
    for (std::size_t iw = 0; iw < spec.dry_weight.nodes; ++iw) {
      nodes.push_back(best_climate(spec.radiation.at(ir), spec.dry_weight.at(iw), spec, params));
    }
  }
  return OptimalClimateTable(spec, params.hash(), std::move(nodes));
}
}  // namespace reference

bool AdviceRanges::is_day(const env::Observation& obs) const {
  return obs[env::kRadiation] > daylight_threshold;
}

namespace {

double outside(double x, const Range& r) {
  if (x < r.lo) return r.lo - x;
  if (x > r.hi) return x - r.hi;
  return 0.0;
}

Distribution uniform_over(const std::array<bool, env::kNumActions>& member) {
  Distribution d{};
  const auto n = std::count(member.begin(), member.end(), true);
  for (std::size_t a = 0; a < env::kNumActions; ++a) {
    d[a] = member[a] ? 1.0 / static_cast<double>(n) : 0.0;
  }
  return d;
}

// Members of the argmin set, allowing for rounding in the scores.
std::array<bool, env::kNumActions> argmin_set(const std::array<double, env::kNumActions>& score) {
  const double best = *std::min_element(score.begin(), score.end());
  std::array<bool, env::kNumActions> member{};
  for (std::size_t a = 0; a < env::kNumActions; ++a) member[a] = score[a] <= best + 1e-12;
  return member;
}

}  // namespace

Distribution constraint_advice(const env::Observation& obs, const AdviceRanges& ranges) {
  const bool day = ranges.is_day(obs);
  const Range& rt = day ? ranges.day_temp : ranges.night_temp;
  const Range& rc = day ? ranges.day_co2 : ranges.night_co2;
  std::array<double, env::kNumActions> distance{};
  for (std::size_t a = 0; a < env::kNumActions; ++a) {
    const env::Action act{static_cast<int>(a)};
    distance[a] = outside(obs[env::kTempSetpoint] + act.temp_delta(), rt) / env::kTempStep +
                  outside(obs[env::kCo2Setpoint] + act.co2_delta(), rc) / env::kCo2Step;
  }
  // Compliant actions have distance exactly 0; otherwise this is the set of
  // least out-of-range actions.
  return uniform_over(argmin_set(distance));
}

double deviation(double temp, double co2, const ClimateTarget& target) {
  return std::abs(temp - target.temp) / env::kTempStep + std::abs(co2 - target.co2) / env::kCo2Step;
}

ClimateTarget target_for(const env::Observation& obs, const OptimalClimateTable& table) {
  return table.lookup(obs[env::kRadiation], obs[env::kDryWeight]);
}

Distribution precise_advice(const env::Observation& obs, const OptimalClimateTable& table) {
  return advice_toward(obs, target_for(obs, table));
}

Distribution advice_toward(const env::Observation& obs, const ClimateTarget& target) {
  std::array<double, env::kNumActions> score{};
  for (std::size_t a = 0; a < env::kNumActions; ++a) {
    const env::Action act{static_cast<int>(a)};
    score[a] = deviation(obs[env::kTempSetpoint] + act.temp_delta(),
                         obs[env::kCo2Setpoint] + act.co2_delta(), target);
  }
  return uniform_over(argmin_set(score));
}

std::array<Prediction, env::kNumActions> predict_all_actions(const env::GreenhouseEnv& e) {
  std::array<Prediction, env::kNumActions> out{};
  for (std::size_t a = 0; a < env::kNumActions; ++a) {
    env::GreenhouseEnv clone = e;
    clone.step(env::Action{static_cast<int>(a)});
    const climate::Measurements m = clone.measurements();
    out[a] = {m.temperature, m.co2};
  }
  return out;
}

int binary_feedback(env::Action taken, const ClimateTarget& target,
                    const std::array<Prediction, env::kNumActions>& predictions, double tol) {
  if (!taken.valid()) throw UsageError("feedback for an invalid action");
  double best_other = INFINITY;
  for (std::size_t a = 0; a < env::kNumActions; ++a) {
    if (static_cast<int>(a) == taken.index) continue;
    best_other = std::min(best_other, deviation(predictions[a].temp, predictions[a].co2, target));
  }
  const Prediction& p = predictions[static_cast<std::size_t>(taken.index)];
  return deviation(p.temp, p.co2, target) <= best_other + tol ? 1 : -1;
}

}  // namespace ghrl::oracle
