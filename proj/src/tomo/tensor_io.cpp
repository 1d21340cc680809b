#include "pnpeval/tensor_io.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pnpeval::io {
namespace {

using nlohmann::json;

void put_u64_le(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

std::uint64_t get_u64_le(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw std::runtime_error("tensor: truncated header length");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

std::uint64_t to_le_bits(double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return bits;
}

double from_le_bits(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

std::size_t element_count(const std::vector<std::int64_t>& shape) {
  std::size_t count = 1;
  for (std::int64_t s : shape) {
    if (s < 0) throw std::runtime_error("tensor: negative extent in shape");
    count *= static_cast<std::size_t>(s);
  }
  return count;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& t) {
  if (element_count(t.shape) != t.data.size())
    throw std::invalid_argument("write_tensor: shape does not match data size");
  json header;
  header["shape"] = t.shape;
  header["dtype"] = "f64";
  header["layout"] = t.layout;
  for (const auto& [key, text] : t.extras) header[key] = json::parse(text);
  const std::string text = header.dump();

  out.write(kTensorMagic, sizeof(kTensorMagic));
  put_u64_le(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  std::vector<std::uint64_t> raw(t.data.size());
  for (std::size_t i = 0; i < t.data.size(); ++i) raw[i] = to_le_bits(t.data[i]);
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint64_t)));
  if (!out) throw std::runtime_error("write_tensor: stream error");
}

Tensor read_tensor(std::istream& in) {
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kTensorMagic, 8) != 0)
    throw std::runtime_error("tensor: bad magic");
  const std::uint64_t len = get_u64_le(in);
  if (len > (1ULL << 30)) throw std::runtime_error("tensor: header too large");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("tensor: truncated header");

  const json header = json::parse(text);
  if (header.value("dtype", "") != "f64") throw std::runtime_error("tensor: dtype must be f64");
  Tensor t;
  t.shape = header.at("shape").get<std::vector<std::int64_t>>();
  t.layout = header.value("layout", "row-major");
  for (auto it = header.begin(); it != header.end(); ++it) {
    if (it.key() == "shape" || it.key() == "dtype" || it.key() == "layout") continue;
    t.extras[it.key()] = it.value().dump();
  }
  const std::size_t count = element_count(t.shape);
  std::vector<std::uint64_t> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(count * sizeof(std::uint64_t)));
  if (!in) throw std::runtime_error("tensor: truncated payload");
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) t.data[i] = from_le_bits(raw[i]);
  return t;
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_tensor: cannot open " + path.string());
  write_tensor(out, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_tensor: cannot open " + path.string());
  return read_tensor(in);
}

Tensor image_tensor(const tomo::Image& image) {
  Tensor t;
  t.shape = {image.grid.side(), image.grid.side()};
  t.layout = "row-major";
  t.extras["pixel_size"] = json(image.grid.pixel_size()).dump();
  t.data.assign(image.values.data(), image.values.data() + image.values.size());
  return t;
}

tomo::Image tensor_image(const Tensor& t, double pixel_size) {
  if (t.shape.size() != 2 || t.shape[0] != t.shape[1])
    throw std::runtime_error("tensor_image: expected a square [side, side] tensor");
  if (auto it = t.extras.find("pixel_size"); it != t.extras.end())
    pixel_size = json::parse(it->second).get<double>();
  tomo::Image im{tomo::ImageGrid(static_cast<int>(t.shape[0]), pixel_size),
                 Eigen::Map<const Vector>(t.data.data(), static_cast<Eigen::Index>(t.data.size()))};
  return im;
}

Tensor sinogram_tensor(const tomo::Sinogram& s) {
  if (!s.geometry) throw std::invalid_argument("sinogram_tensor: missing geometry");
  Tensor t;
  t.shape = {s.geometry->num_projections(), s.geometry->num_detectors()};
  t.layout = "projection-major";
  t.extras["angles"] = json(s.geometry->angles()).dump();
  t.data.assign(s.values.data(), s.values.data() + s.values.size());
  return t;
}

tomo::Sinogram tensor_sinogram(const Tensor& t, const tomo::GeometryPtr& geometry) {
  if (t.layout != "projection-major") throw std::runtime_error("tensor_sinogram: wrong layout");
  if (t.shape.size() != 2 || t.shape[0] != geometry->num_projections() ||
      t.shape[1] != geometry->num_detectors())
    throw std::runtime_error("tensor_sinogram: shape does not match geometry");
  return {geometry,
          Eigen::Map<const Vector>(t.data.data(), static_cast<Eigen::Index>(t.data.size()))};
}

Tensor image_batch_tensor(const tomo::ImageGrid& grid, const std::vector<Vector>& images) {
  Tensor t;
  t.shape = {static_cast<std::int64_t>(images.size()), grid.side(), grid.side()};
  t.layout = "row-major";
  t.data.reserve(images.size() * static_cast<std::size_t>(grid.n()));
  for (const Vector& v : images) {
    if (v.size() != grid.n()) throw std::invalid_argument("image_batch_tensor: size mismatch");
    t.data.insert(t.data.end(), v.data(), v.data() + v.size());
  }
  return t;
}

std::vector<Vector> tensor_image_batch(const Tensor& t) {
  if (t.shape.size() != 3) throw std::runtime_error("tensor_image_batch: expected [N, side, side]");
  const auto count = static_cast<std::size_t>(t.shape[0]);
  const auto n = static_cast<Eigen::Index>(t.shape[1] * t.shape[2]);
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.emplace_back(Eigen::Map<const Vector>(t.data.data() + i * static_cast<std::size_t>(n), n));
  return out;
}

Tensor sinogram_batch_tensor(const tomo::RadonGeometry& geom, const std::vector<Vector>& sinos) {
  Tensor t;
  t.shape = {static_cast<std::int64_t>(sinos.size()), geom.num_projections(),
             geom.num_detectors()};
  t.layout = "projection-major";
  t.extras["angles"] = json(geom.angles()).dump();
  for (const Vector& v : sinos) {
    if (v.size() != geom.measurement_dim())
      throw std::invalid_argument("sinogram_batch_tensor: size mismatch");
    t.data.insert(t.data.end(), v.data(), v.data() + v.size());
  }
  return t;
}

}  // namespace pnpeval::io
