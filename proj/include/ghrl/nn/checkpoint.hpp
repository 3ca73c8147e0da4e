#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ghrl/nn/adam.hpp"
#include "ghrl/nn/mlp.hpp"

namespace ghrl::nn {

// Named-record binary container. Layout: "GHRLCKPT", u32 version, u32 record
// count, then per record: u32 name length, name, u8 kind, u64 element count,
// payload. Numbers are stored in host byte order (little-endian targets only).
class Archive {
 public:
  static constexpr std::uint32_t kVersion = 1;
  using Value = std::variant<std::vector<double>, std::vector<std::uint64_t>, std::string>;

  void put(const std::string& name, std::span<const double> values);
  void put(const std::string& name, std::span<const std::uint64_t> values);
  void put(const std::string& name, std::string text);
  void put_u64(const std::string& name, std::uint64_t v) { put(name, std::span<const std::uint64_t>(&v, 1)); }
  void put_double(const std::string& name, double v) { put(name, std::span<const double>(&v, 1)); }

  bool has(const std::string& name) const { return records_.contains(name); }
  // Throw FormatError when missing or of another kind.
  const std::vector<double>& doubles(const std::string& name) const;
  const std::vector<std::uint64_t>& u64s(const std::string& name) const;
  const std::string& text(const std::string& name) const;
  std::uint64_t u64(const std::string& name) const;
  double scalar(const std::string& name) const;

  void save(const std::filesystem::path& path) const;
  static Archive load(const std::filesystem::path& path);

  const std::map<std::string, Value>& records() const { return records_; }

 private:
  std::map<std::string, Value> records_;
};

void save_mlp(Archive& ar, const std::string& prefix, const Mlp& net);
Mlp load_mlp(const Archive& ar, const std::string& prefix);

void save_adam(Archive& ar, const std::string& prefix, const Adam& opt);
Adam load_adam(const Archive& ar, const std::string& prefix);

void save_rng(Archive& ar, const std::string& name, const std::mt19937_64& rng);
std::mt19937_64 load_rng(const Archive& ar, const std::string& name);

}  // namespace ghrl::nn
