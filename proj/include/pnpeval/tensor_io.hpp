#pragma once

// Flat binary tensor format shared by images, sinograms and sample batches:
//
//   bytes 0..7   magic "PNPTNSR1"
//   bytes 8..15  header length L, unsigned little-endian 64-bit
//   next L bytes JSON header: {"shape": [...], "dtype": "f64",
//                "layout": "row-major" | "projection-major", ...}
//   remainder    prod(shape) little-endian IEEE-754 doubles

#include "pnpeval/common.hpp"
#include "pnpeval/tomo.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace pnpeval::io {

inline constexpr char kTensorMagic[8] = {'P', 'N', 'P', 'T', 'N', 'S', 'R', '1'};

struct Tensor {
  std::vector<std::int64_t> shape;
  std::string layout = "row-major";
  /// Extra header fields, stored verbatim as JSON text.
  std::map<std::string, std::string> extras;
  std::vector<double> data;
};

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);
void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);

/// Image as shape [side, side], row-major.
Tensor image_tensor(const tomo::Image& image);
tomo::Image tensor_image(const Tensor& t, double pixel_size = 1.0);

/// Sinogram as shape [p, d], projection-major; angles kept in the header.
Tensor sinogram_tensor(const tomo::Sinogram& s);
/// Values only; the caller supplies the geometry it belongs to.
tomo::Sinogram tensor_sinogram(const Tensor& t, const tomo::GeometryPtr& geometry);

/// Batch of images as shape [N, side, side].
Tensor image_batch_tensor(const tomo::ImageGrid& grid, const std::vector<Vector>& images);
std::vector<Vector> tensor_image_batch(const Tensor& t);

/// Batch of sinograms as shape [N, p, d].
Tensor sinogram_batch_tensor(const tomo::RadonGeometry& geom, const std::vector<Vector>& sinos);

}  // namespace pnpeval::io
