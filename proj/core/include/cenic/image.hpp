#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cenic/tensor.hpp"

namespace cenic {

// Images are (1, 3, H, W) tensors with values in [0, 1].

// Binary P6, maxval 255. IoError if the file cannot be opened, InputError if
// it is not a P6 image.
Tensor read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Tensor& img);

// round(clamp(x, 0, 1) * 255) / 255
Tensor requantize8(const Tensor& img);

// Seeded smooth gradients overlaid with band-limited noise textures.
std::vector<Tensor> synthetic_images(int count, int height, int width, std::uint64_t seed);

// Every .ppm file in `dir`, sorted by name. DataError if none can be read.
std::vector<Tensor> load_image_dir(const std::filesystem::path& dir);

}  // namespace cenic
