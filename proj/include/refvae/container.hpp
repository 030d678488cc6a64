#pragma once

#include "refvae/layers.hpp"
#include "refvae/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace refvae {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NamedArray {
  std::vector<std::int64_t> shape;
  std::vector<double> values;

  bool operator==(const NamedArray&) const = default;
};

/// Versioned file of named float64 arrays plus string metadata.
///
/// Layout (little-endian): magic "RVAEARR\0", u32 version, u32 text count,
/// {u32 len, key, u32 len, value}*, u32 array count,
/// {u32 len, name, u32 ndim, i64 dims[ndim], f64 values[prod(dims)]}*,
/// then a u64 FNV-1a checksum of every preceding byte. Keys are written in
/// sorted order, so serialisation is a pure function of the contents.
class ArrayContainer {
 public:
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, NamedArray> arrays;
  std::map<std::string, std::string> text;

  std::string serialize() const;
  /// Validates magic, version and checksum before decoding anything.
  static ArrayContainer deserialize(const std::string& bytes);

  void save(const std::filesystem::path& path) const;
  static ArrayContainer load(const std::filesystem::path& path);

  const NamedArray& array(const std::string& name) const;
  const std::string& get_text(const std::string& key) const;

  bool operator==(const ArrayContainer&) const = default;
};

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ULL);

template <typename S>
NamedArray to_named_array(const Tensor<S>& t) {
  NamedArray a;
  a.shape = {t.height, t.width, t.channels()};
  a.values.assign(t.data.data(), t.data.data() + t.data.size());
  return a;
}

template <typename S>
Tensor<S> from_named_array(const NamedArray& a) {
  if (a.shape.size() != 3) throw FormatError("named array must be rank 3");
  Tensor<S> t(static_cast<int>(a.shape[0]), static_cast<int>(a.shape[1]), static_cast<int>(a.shape[2]));
  if (static_cast<std::size_t>(t.data.size()) != a.values.size()) throw FormatError("named array value count mismatch");
  for (std::size_t i = 0; i < a.values.size(); ++i) t.data.data()[i] = static_cast<S>(a.values[i]);
  return t;
}

template <typename S>
void store_params(const ParamList<S>& params, ArrayContainer& out) {
  for (const auto& [name, var] : params) out.arrays[name] = to_named_array(var.value());
}

/// Overwrites every parameter from `in`, checking names and shapes first so
/// a mismatch leaves the parameters untouched.
template <typename S>
void load_params(ParamList<S>& params, const ArrayContainer& in) {
  for (const auto& [name, var] : params) {
    auto it = in.arrays.find(name);
    if (it == in.arrays.end()) throw FormatError("missing array '" + name + "'");
    const Tensor<S>& v = var.value();
    const std::vector<std::int64_t> expected{v.height, v.width, v.channels()};
    if (it->second.shape != expected) throw FormatError("shape mismatch for '" + name + "'");
  }
  for (auto& [name, var] : params) var.mutable_value() = from_named_array<S>(in.arrays.at(name));
}

template <typename S>
std::uint64_t hash_params(const ParamList<S>& params) {
  std::uint64_t h = fnv1a(nullptr, 0);
  for (const auto& [name, var] : params) {
    h = fnv1a(name.data(), name.size(), h);
    const Eigen::MatrixXd values = var.value().data.template cast<double>();
    h = fnv1a(values.data(), sizeof(double) * values.size(), h);
  }
  return h;
}

}  // namespace refvae
