#include "refvae/container.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace refvae {

namespace {

constexpr char kMagic[8] = {'R', 'V', 'A', 'E', 'A', 'R', 'R', '\0'};

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw FormatError("container truncated");
  }
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = sizeof(kMagic);
};

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

std::string ArrayContainer::serialize() const {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  for (const auto& [k, v] : text) {
    put_string(out, k);
    put_string(out, v);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& [name, a] : arrays) {
    put_string(out, name);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put<std::int64_t>(out, d);
    out.append(reinterpret_cast<const char*>(a.values.data()), a.values.size() * sizeof(double));
  }
  put<std::uint64_t>(out, fnv1a(out.data(), out.size()));
  return out;
}

ArrayContainer ArrayContainer::deserialize(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + 4 + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a refvae array container");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  Reader r(bytes, body);
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) {
    throw FormatError("unsupported container version " + std::to_string(version) + " (expected " +
                      std::to_string(kVersion) + ")");
  }
  if (fnv1a(bytes.data(), body) != stored) throw FormatError("container checksum mismatch (corrupted file)");

  ArrayContainer c;
  const auto n_text = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_text; ++i) {
    std::string k = r.get_string();
    c.text[k] = r.get_string();
  }
  const auto n_arrays = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_arrays; ++i) {
    std::string name = r.get_string();
    NamedArray a;
    const auto ndim = r.get<std::uint32_t>();
    std::int64_t count = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      a.shape.push_back(r.get<std::int64_t>());
      if (a.shape.back() < 0) throw FormatError("negative dimension in '" + name + "'");
      count *= a.shape.back();
    }
    a.values.resize(static_cast<std::size_t>(count));
    for (auto& v : a.values) v = r.get<double>();
    c.arrays.emplace(std::move(name), std::move(a));
  }
  if (!r.done()) throw FormatError("trailing bytes in container");
  return c;
}

void ArrayContainer::save(const std::filesystem::path& path) const {
  const std::string bytes = serialize();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ArrayContainer ArrayContainer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

const NamedArray& ArrayContainer::array(const std::string& name) const {
  auto it = arrays.find(name);
  if (it == arrays.end()) throw FormatError("missing array '" + name + "'");
  return it->second;
}

const std::string& ArrayContainer::get_text(const std::string& key) const {
  auto it = text.find(key);
  if (it == text.end()) throw FormatError("missing metadata key '" + key + "'");
  return it->second;
}

}  // namespace refvae
