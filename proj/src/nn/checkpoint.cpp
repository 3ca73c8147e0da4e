#include "ghrl/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "ghrl/errors.hpp"

namespace ghrl::nn {

namespace {

constexpr char kMagic[8] = {'G', 'H', 'R', 'L', 'C', 'K', 'P', 'T'};

enum Kind : std::uint8_t { kDoubles = 0, kU64s = 1, kText = 2 };

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw FormatError("checkpoint truncated");
  return v;
}

}  // namespace

void Archive::put(const std::string& name, std::span<const double> values) {
  records_[name] = std::vector<double>(values.begin(), values.end());
}
void Archive::put(const std::string& name, std::span<const std::uint64_t> values) {
  records_[name] = std::vector<std::uint64_t>(values.begin(), values.end());
}
void Archive::put(const std::string& name, std::string text) { records_[name] = std::move(text); }

template <typename T>
static const T& get_as(const std::map<std::string, Archive::Value>& records,
                       const std::string& name) {
  const auto it = records.find(name);
  if (it == records.end()) throw FormatError("checkpoint is missing '" + name + "'");
  const T* v = std::get_if<T>(&it->second);
  if (v == nullptr) throw FormatError("checkpoint record '" + name + "' has the wrong kind");
  return *v;
}

const std::vector<double>& Archive::doubles(const std::string& name) const {
  return get_as<std::vector<double>>(records_, name);
}
const std::vector<std::uint64_t>& Archive::u64s(const std::string& name) const {
  return get_as<std::vector<std::uint64_t>>(records_, name);
}
const std::string& Archive::text(const std::string& name) const {
  return get_as<std::string>(records_, name);
}
std::uint64_t Archive::u64(const std::string& name) const {
  const auto& v = u64s(name);
  if (v.size() != 1) throw FormatError("checkpoint record '" + name + "' is not a scalar");
  return v[0];
}
double Archive::scalar(const std::string& name) const {
  const auto& v = doubles(name);
  if (v.size() != 1) throw FormatError("checkpoint record '" + name + "' is not a scalar");
  return v[0];
}

void Archive::save(const std::filesystem::path& path) const {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint32_t>(records_.size()));
    for (const auto& [name, value] : records_) {
      write_pod(out, static_cast<std::uint32_t>(name.size()));
      out.write(name.data(), static_cast<std::streamsize>(name.size()));
      if (const auto* d = std::get_if<std::vector<double>>(&value)) {
        write_pod(out, kDoubles);
        write_pod(out, static_cast<std::uint64_t>(d->size()));
        out.write(reinterpret_cast<const char*>(d->data()),
                  static_cast<std::streamsize>(d->size() * sizeof(double)));
      } else if (const auto* u = std::get_if<std::vector<std::uint64_t>>(&value)) {
        write_pod(out, kU64s);
        write_pod(out, static_cast<std::uint64_t>(u->size()));
        out.write(reinterpret_cast<const char*>(u->data()),
                  static_cast<std::streamsize>(u->size() * sizeof(std::uint64_t)));
      } else {
        const auto& s = std::get<std::string>(value);
        write_pod(out, kText);
        write_pod(out, static_cast<std::uint64_t>(s.size()));
        out.write(s.data(), static_cast<std::streamsize>(s.size()));
      }
    }
    if (!out) throw DataError("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Archive Archive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw FormatError(path.string() + " is not a checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) + " unsupported");
  }
  const auto count = read_pod<std::uint32_t>(in);
  Archive ar;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = read_pod<std::uint32_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto kind = read_pod<std::uint8_t>(in);
    const auto n = read_pod<std::uint64_t>(in);
    if (n > (1ull << 36)) throw FormatError("checkpoint record '" + name + "' too large");
    switch (kind) {
      case kDoubles: {
        std::vector<double> v(n);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
        ar.records_[name] = std::move(v);
        break;
      }
      case kU64s: {
        std::vector<std::uint64_t> v(n);
        in.read(reinterpret_cast<char*>(v.data()),
                static_cast<std::streamsize>(n * sizeof(std::uint64_t)));
        ar.records_[name] = std::move(v);
        break;
      }
      case kText: {
        std::string s(n, '\0');
        in.read(s.data(), static_cast<std::streamsize>(n));
        ar.records_[name] = std::move(s);
        break;
      }
      default: throw FormatError("checkpoint record '" + name + "' has unknown kind");
    }
    if (!in) throw FormatError("checkpoint truncated in '" + name + "'");
  }
  return ar;
}

void save_mlp(Archive& ar, const std::string& prefix, const Mlp& net) {
  std::vector<std::uint64_t> sizes(net.sizes().begin(), net.sizes().end());
  ar.put(prefix + ".sizes", std::span<const std::uint64_t>(sizes));
  ar.put(prefix + ".params", net.params());
}

Mlp load_mlp(const Archive& ar, const std::string& prefix) {
  const auto& s = ar.u64s(prefix + ".sizes");
  Mlp net(std::vector<std::size_t>(s.begin(), s.end()));
  const auto& p = ar.doubles(prefix + ".params");
  if (p.size() != net.num_params()) throw FormatError(prefix + ": parameter count mismatch");
  std::copy(p.begin(), p.end(), net.params().begin());
  return net;
}

void save_adam(Archive& ar, const std::string& prefix, const Adam& opt) {
  ar.put(prefix + ".m", std::span<const double>(opt.first_moment()));
  ar.put(prefix + ".v", std::span<const double>(opt.second_moment()));
  ar.put_u64(prefix + ".t", opt.steps());
  ar.put_double(prefix + ".lr", opt.lr());
}

Adam load_adam(const Archive& ar, const std::string& prefix) {
  const auto& m = ar.doubles(prefix + ".m");
  const auto& v = ar.doubles(prefix + ".v");
  if (m.size() != v.size()) throw FormatError(prefix + ": moment size mismatch");
  Adam opt(m.size(), ar.scalar(prefix + ".lr"));
  opt.first_moment() = m;
  opt.second_moment() = v;
  opt.set_steps(ar.u64(prefix + ".t"));
  return opt;
}

void save_rng(Archive& ar, const std::string& name, const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  ar.put(name, os.str());
}

std::mt19937_64 load_rng(const Archive& ar, const std::string& name) {
  std::istringstream is(ar.text(name));
  std::mt19937_64 rng;
  is >> rng;
  if (!is) throw FormatError("checkpoint RNG state '" + name + "' unreadable");
  return rng;
}

}  // namespace ghrl::nn
