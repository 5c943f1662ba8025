#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace mealgen {

// Interleaved 8-bit RGB image.
struct ImageU8 {
  int h = 0;
  int w = 0;
  std::vector<uint8_t> px;  // h*w*3

  uint8_t& at(int y, int x, int c) { return px[static_cast<size_t>((y * w + x) * 3 + c)]; }
  uint8_t at(int y, int x, int c) const { return px[static_cast<size_t>((y * w + x) * 3 + c)]; }
};

void write_ppm(const std::string& path, const ImageU8& img);
ImageU8 read_ppm(const std::string& path);

// [3,h,w] tensor in [-1,1] <-> 8-bit RGB.
Tensor image_to_tensor(const ImageU8& img);
ImageU8 tensor_to_image(const Tensor& t);

// Batched conversion helpers; chw shape [B,3,h,w].
Tensor images_to_batch(const std::vector<ImageU8>& imgs);

// Tile a list of equally sized images into rows x cols with a small gutter.
ImageU8 tile_grid(const std::vector<ImageU8>& imgs, int cols);

}  // namespace mealgen
