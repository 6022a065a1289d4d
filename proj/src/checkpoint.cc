#include "crossaug/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace crossaug {

namespace {

constexpr char kMagic[8] = {'X', 'A', 'U', 'G', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <class U>
void put_le(std::ostream& out, U v) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <class U>
U get_le(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    throw CheckpointError("truncated checkpoint");
  }
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes[i]) << (8 * i);
  return v;
}

}  // namespace

void write_arrays(std::ostream& out, const std::vector<NamedArray>& arrays) {
  out.write(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& a : arrays) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.value.shape().size()));
    for (std::size_t d : a.value.shape()) put_le<std::uint64_t>(out, d);
    for (double v : a.value.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  if (!out) throw CheckpointError("checkpoint write failed");
}

std::vector<NamedArray> read_arrays(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(in);
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get_le<std::uint32_t>(in);
  std::vector<NamedArray> arrays;
  arrays.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedArray a;
    a.name.resize(get_le<std::uint32_t>(in));
    if (!in.read(a.name.data(), static_cast<std::streamsize>(a.name.size()))) {
      throw CheckpointError("truncated checkpoint");
    }
    Shape shape(get_le<std::uint32_t>(in));
    for (auto& d : shape) d = get_le<std::uint64_t>(in);
    a.value = Array(shape);
    for (double& v : a.value.values()) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
    arrays.push_back(std::move(a));
  }
  return arrays;
}

void save_arrays(const std::string& path, const std::vector<NamedArray>& arrays) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path);
  write_arrays(out, arrays);
}

std::vector<NamedArray> load_arrays(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  return read_arrays(in);
}

void save_parameters(const std::string& path, const std::vector<const ad::Parameter*>& params) {
  std::vector<NamedArray> arrays;
  arrays.reserve(params.size());
  for (const auto* p : params) arrays.push_back({p->name, p->value});
  save_arrays(path, arrays);
}

void load_parameters(const std::string& path, const std::vector<ad::Parameter*>& params) {
  std::map<std::string, Array> by_name;
  for (auto& a : load_arrays(path)) by_name.emplace(std::move(a.name), std::move(a.value));
  for (auto* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw CheckpointError("checkpoint lacks parameter " + p->name);
    if (it->second.shape() != p->value.shape()) {
      throw CheckpointError("parameter " + p->name + " has shape " +
                            shape_string(it->second.shape()) + ", expected " +
                            shape_string(p->value.shape()));
    }
    p->value = std::move(it->second);
    p->zero_grad();
  }
}

}  // namespace crossaug
