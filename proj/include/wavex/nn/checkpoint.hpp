#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "wavex/dataset.hpp"
#include "wavex/nn/layers.hpp"

namespace wavex::nn {

inline constexpr std::uint32_t kWxckVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<float> values;

  bool operator==(const NamedArray&) const = default;
};

/// WXCK layout (little-endian): "WXCK" u32 version u32 count, then per tensor
/// u16 name length, name bytes, u8 rank, u32 dims[rank], f32 payload.
inline void write_checkpoint(const std::string& path, const std::vector<NamedArray>& arrays) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::IoError, "cannot open " + path + " for writing");
  wfd_detail::Writer w(out);
  w.raw("WXCK", 4);
  w.le<std::uint32_t>(kWxckVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    if (a.name.size() > 0xFFFF) fail(Errc::BadConfig, "tensor name too long");
    if (a.shape.size() > 255) fail(Errc::BadConfig, "tensor rank too large");
    if (shape_numel(a.shape) != a.values.size()) fail(Errc::ShapeMismatch, "payload of " + a.name);
    w.le<std::uint16_t>(static_cast<std::uint16_t>(a.name.size()));
    w.raw(a.name.data(), a.name.size());
    const char rank = static_cast<char>(a.shape.size());
    w.raw(&rank, 1);
    for (int d : a.shape) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
    for (float v : a.values) w.le<float>(v);
  }
  if (!out) fail(Errc::IoError, "write failed for " + path);
}

inline std::vector<NamedArray> read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  wfd_detail::Reader r(in, path);
  char magic[4];
  r.read(magic, 4);
  if (std::memcmp(magic, "WXCK", 4) != 0) fail(Errc::BadMagic, path);
  const auto version = r.le<std::uint32_t>();
  if (version != kWxckVersion) fail(Errc::VersionMismatch, path + " has version " + std::to_string(version));
  const auto count = r.le<std::uint32_t>();
  std::vector<NamedArray> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedArray a;
    a.name.resize(r.le<std::uint16_t>());
    r.read(a.name.data(), a.name.size());
    char rank = 0;
    r.read(&rank, 1);
    for (int d = 0; d < static_cast<unsigned char>(rank); ++d) a.shape.push_back(static_cast<int>(r.le<std::uint32_t>()));
    a.values.resize(shape_numel(a.shape));
    for (auto& v : a.values) v = r.le<float>();
    out.push_back(std::move(a));
  }
  return out;
}

template <class T>
std::vector<NamedArray> export_params(const ParamList<T>& params) {
  std::vector<NamedArray> out;
  for (const auto& [name, t] : params.items) {
    NamedArray a{name, t.shape(), {}};
    a.values.reserve(t.numel());
    for (T v : t.values()) a.values.push_back(static_cast<float>(v));
    out.push_back(std::move(a));
  }
  return out;
}

/// Copies arrays into parameters by name; every parameter must be present
/// with a matching shape.
template <class T>
void import_params(ParamList<T>& params, const std::vector<NamedArray>& arrays) {
  std::map<std::string, const NamedArray*> by_name;
  for (const auto& a : arrays) by_name[a.name] = &a;
  for (auto& [name, t] : params.items) {
    auto it = by_name.find(name);
    if (it == by_name.end()) fail(Errc::ShapeMismatch, "checkpoint lacks " + name);
    if (it->second->shape != t.shape()) fail(Errc::ShapeMismatch, "checkpoint shape of " + name + " is " + shape_str(it->second->shape));
    for (std::size_t i = 0; i < t.numel(); ++i) t.values()[i] = static_cast<T>(it->second->values[i]);
  }
}

/// FNV-1a over names, shapes and values; used to show parameters are unchanged.
template <class T>
std::uint64_t params_digest(const ParamList<T>& params) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 1099511628211ull;
  };
  for (const auto& [name, t] : params.items) {
    mix(name.data(), name.size());
    mix(t.shape().data(), t.shape().size() * sizeof(int));
    mix(t.values().data(), t.values().size() * sizeof(T));
  }
  return h;
}

/// Extra non-parameter arrays (normalisation statistics, embeddings scales).
inline const NamedArray& find_array(const std::vector<NamedArray>& arrays, const std::string& name) {
  for (const auto& a : arrays)
    if (a.name == name) return a;
  fail(Errc::ShapeMismatch, "checkpoint lacks " + name);
}

}  // namespace wavex::nn
