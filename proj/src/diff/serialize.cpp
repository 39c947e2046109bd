#include "bop/diff/serialize.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "weight blobs are little-endian; big-endian hosts unsupported");

namespace bop::diff {

namespace {

constexpr char kMagic[4] = {'B', 'O', 'P', 'W'};

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("weight blob: truncated stream");
  return v;
}

void write_header(std::ostream& os, std::uint32_t count) {
  os.write(kMagic, 4);
  write_pod<std::uint32_t>(os, kWeightsFormatVersion);
  write_pod<std::uint32_t>(os, count);
}

std::uint32_t read_header(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("weight blob: bad magic");
  const auto version = read_pod<std::uint32_t>(is);
  if (version != kWeightsFormatVersion)
    throw std::runtime_error("weight blob: unsupported format version");
  return read_pod<std::uint32_t>(is);
}

void write_one(std::ostream& os, const Tensor& t) {
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape().size()));
  for (auto d : t.shape()) write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(d));
  os.write(reinterpret_cast<const char*>(t.data().data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Shape read_shape(std::istream& is) {
  const auto rank = read_pod<std::uint32_t>(is);
  if (rank > 8) throw std::runtime_error("weight blob: implausible rank");
  Shape shape(rank);
  for (auto& d : shape) d = static_cast<std::size_t>(read_pod<std::uint64_t>(is));
  return shape;
}

std::vector<double> read_payload(std::istream& is, const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> data(n);
  is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("weight blob: truncated payload");
  return data;
}

}  // namespace

void write_tensors(std::ostream& os, const std::vector<Tensor>& tensors) {
  write_header(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) write_one(os, t);
}

std::vector<Tensor> read_tensors(std::istream& is) {
  const auto count = read_header(is);
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    auto shape = read_shape(is);
    auto data = read_payload(is, shape);
    out.push_back(Tensor::from_vector(std::move(shape), std::move(data)));
  }
  return out;
}

void load_tensor_values(std::istream& is, std::vector<Tensor>& into) {
  const auto count = read_header(is);
  if (count != into.size()) throw std::runtime_error("weight blob: tensor count mismatch");
  for (auto& t : into) {
    auto shape = read_shape(is);
    if (shape != t.shape()) throw std::runtime_error("weight blob: tensor shape mismatch");
    t.data() = read_payload(is, shape);
  }
}

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace bop::diff
