#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "wavex/error.hpp"
#include "wavex/field.hpp"
#include "wavex/grid.hpp"

namespace wavex {

/// One benchmark sample: spectral value, environment scalars, model input
/// channels, and the target field, all at single precision on disk.
struct Sample {
  double nu = 0.0;
  std::vector<double> env;
  std::vector<Grid<float>> channels;
  Grid<float> re;
  Grid<float> im;

  bool operator==(const Sample&) const = default;
};

struct Dataset {
  DomainId domain = DomainId::SimpleWave;
  int rows = 0;
  int cols = 0;
  int n_channels = 0;
  int n_env = 0;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool operator==(const Dataset&) const = default;
};

inline ComplexField to_field(const Sample& s, DomainId domain) {
  ComplexField u(s.re.rows(), s.re.cols(), s.nu, Environment{s.env}, domain);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u.re[i] = s.re[i];
    u.im[i] = s.im[i];
  }
  return u;
}

inline ComplexField target_field(const Dataset& ds, std::size_t index) { return to_field(ds.samples.at(index), ds.domain); }

inline void store_field(Sample& s, const ComplexField& u) {
  s.re = Grid<float>(u.rows(), u.cols());
  s.im = Grid<float>(u.rows(), u.cols());
  for (std::size_t i = 0; i < u.size(); ++i) {
    s.re[i] = static_cast<float>(u.re[i]);
    s.im[i] = static_cast<float>(u.im[i]);
  }
}

namespace wfd_detail {

class Writer {
 public:
  explicit Writer(std::ofstream& out) : out_(out) {}
  template <class U>
  void le(U value) {
    using Raw = std::conditional_t<sizeof(U) == 8, std::uint64_t,
                                   std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint16_t>>;
    Raw raw = std::bit_cast<Raw>(value);
    char bytes[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((raw >> (8 * i)) & 0xFF);
    out_.write(bytes, sizeof(U));
  }
  void raw(const char* p, std::size_t n) { out_.write(p, static_cast<std::streamsize>(n)); }

 private:
  std::ofstream& out_;
};

class Reader {
 public:
  Reader(std::ifstream& in, std::string path) : in_(in), path_(std::move(path)) {}
  template <class U>
  U le() {
    using Raw = std::conditional_t<sizeof(U) == 8, std::uint64_t,
                                   std::conditional_t<sizeof(U) == 4, std::uint32_t, std::uint16_t>>;
    unsigned char bytes[sizeof(U)];
    read(reinterpret_cast<char*>(bytes), sizeof(U));
    Raw raw = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) raw |= static_cast<Raw>(bytes[i]) << (8 * i);
    return std::bit_cast<U>(raw);
  }
  void read(char* p, std::size_t n) {
    in_.read(p, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) fail(Errc::TruncatedFile, path_);
  }

 private:
  std::ifstream& in_;
  std::string path_;
};

}  // namespace wfd_detail

inline constexpr std::uint32_t kWfdVersion = 1;

/// WFD1 layout (little-endian):
///   "WFD1" u32 version u16 domain u32 count u32 H u32 W u32 n_channels u32 n_env
///   per sample: f64 nu, f64 env[n_env], f32 channel planes, f32 re plane, f32 im plane
inline void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path + " for writing");
  wfd_detail::Writer w(out);
  w.raw("WFD1", 4);
  w.le<std::uint32_t>(kWfdVersion);
  w.le<std::uint16_t>(static_cast<std::uint16_t>(ds.domain));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ds.samples.size()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ds.rows));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ds.cols));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ds.n_channels));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(ds.n_env));
  const std::size_t plane = std::size_t(ds.rows) * ds.cols;
  auto put_plane = [&](const Grid<float>& g) {
    if (g.size() != plane) fail(Errc::ShapeMismatch, "plane size mismatch while writing " + path);
    for (float v : g) w.le<float>(v);
  };
  for (const auto& s : ds.samples) {
    if (s.env.size() != std::size_t(ds.n_env) || s.channels.size() != std::size_t(ds.n_channels))
      fail(Errc::ShapeMismatch, "sample layout does not match dataset header");
    w.le<double>(s.nu);
    for (double e : s.env) w.le<double>(e);
    for (const auto& c : s.channels) put_plane(c);
    put_plane(s.re);
    put_plane(s.im);
  }
  if (!out) fail(Errc::IoError, "write failed for " + path);
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  wfd_detail::Reader r(in, path);
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, "WFD1", 4) != 0) fail(Errc::BadMagic, path);
  const auto version = r.le<std::uint32_t>();
  if (version != kWfdVersion) fail(Errc::VersionMismatch, path + " has version " + std::to_string(version));
  Dataset ds;
  const auto dom = r.le<std::uint16_t>();
  if (dom > 2) fail(Errc::UnknownDomain, path);
  ds.domain = static_cast<DomainId>(dom);
  const auto count = r.le<std::uint32_t>();
  ds.rows = static_cast<int>(r.le<std::uint32_t>());
  ds.cols = static_cast<int>(r.le<std::uint32_t>());
  ds.n_channels = static_cast<int>(r.le<std::uint32_t>());
  ds.n_env = static_cast<int>(r.le<std::uint32_t>());
  auto get_plane = [&] {
    Grid<float> g(ds.rows, ds.cols);
    for (auto& v : g) v = r.le<float>();
    return g;
  };
  ds.samples.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    Sample s;
    s.nu = r.le<double>();
    s.env.resize(ds.n_env);
    for (auto& e : s.env) e = r.le<double>();
    for (int c = 0; c < ds.n_channels; ++c) s.channels.push_back(get_plane());
    s.re = get_plane();
    s.im = get_plane();
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

/// Bytes per sample record, header excluded.
inline std::size_t wfd_record_size(const Dataset& ds) {
  return 8 + 8 * std::size_t(ds.n_env) + 4 * std::size_t(ds.n_channels + 2) * ds.rows * ds.cols;
}

}  // namespace wavex
