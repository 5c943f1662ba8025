#include "core/image.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "core/check.hpp"

namespace mealgen {

void write_ppm(const std::string& path, const ImageU8& img) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "write_ppm: cannot open " + path);
  out << "P6\n" << img.w << " " << img.h << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
  require(out.good(), "write_ppm: short write to " + path);
}

ImageU8 read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "read_ppm: cannot open " + path);
  std::string magic;
  in >> magic;
  require(magic == "P6", "read_ppm: not a P6 file: " + path);
  int w = 0, h = 0, maxval = 0;
  in >> w >> h >> maxval;
  require(w > 0 && h > 0 && maxval == 255, "read_ppm: unsupported header in " + path);
  in.get();  // single whitespace after header
  ImageU8 img;
  img.w = w;
  img.h = h;
  img.px.resize(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
  require(in.gcount() == static_cast<std::streamsize>(img.px.size()), "read_ppm: truncated file " + path);
  return img;
}

Tensor image_to_tensor(const ImageU8& img) {
  Tensor t({3, img.h, img.w});
  const long hw = static_cast<long>(img.h) * img.w;
  for (long i = 0; i < hw; ++i)
    for (int c = 0; c < 3; ++c)
      t[c * hw + i] = static_cast<double>(img.px[static_cast<size_t>(i * 3 + c)]) / 127.5 - 1.0;
  return t;
}

ImageU8 tensor_to_image(const Tensor& t) {
  require(t.ndim() == 3 && t.dim(0) == 3, "tensor_to_image: want [3,h,w]");
  ImageU8 img;
  img.h = static_cast<int>(t.dim(1));
  img.w = static_cast<int>(t.dim(2));
  img.px.resize(static_cast<size_t>(img.h) * img.w * 3);
  const long hw = static_cast<long>(img.h) * img.w;
  for (long i = 0; i < hw; ++i)
    for (int c = 0; c < 3; ++c) {
      double v = (t[c * hw + i] + 1.0) * 127.5;
      img.px[static_cast<size_t>(i * 3 + c)] = static_cast<uint8_t>(std::clamp(v, 0.0, 255.0) + 0.5);
    }
  return img;
}

Tensor images_to_batch(const std::vector<ImageU8>& imgs) {
  require(!imgs.empty(), "images_to_batch: empty");
  const int h = imgs[0].h, w = imgs[0].w;
  Tensor t({static_cast<long>(imgs.size()), 3, h, w});
  const long per = 3L * h * w;
  for (size_t n = 0; n < imgs.size(); ++n) {
    require(imgs[n].h == h && imgs[n].w == w, "images_to_batch: size mismatch");
    Tensor one = image_to_tensor(imgs[n]);
    std::copy(one.data(), one.data() + per, t.data() + static_cast<long>(n) * per);
  }
  return t;
}

ImageU8 tile_grid(const std::vector<ImageU8>& imgs, int cols) {
  require(!imgs.empty() && cols >= 1, "tile_grid: bad args");
  const int h = imgs[0].h, w = imgs[0].w, pad = 2;
  const int rows = (static_cast<int>(imgs.size()) + cols - 1) / cols;
  ImageU8 grid;
  grid.h = rows * h + (rows + 1) * pad;
  grid.w = cols * w + (cols + 1) * pad;
  grid.px.assign(static_cast<size_t>(grid.h) * grid.w * 3, 20);
  for (size_t i = 0; i < imgs.size(); ++i) {
    const int r = static_cast<int>(i) / cols, c = static_cast<int>(i) % cols;
    const int y0 = pad + r * (h + pad), x0 = pad + c * (w + pad);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int ch = 0; ch < 3; ++ch) grid.at(y0 + y, x0 + x, ch) = imgs[i].at(y, x, ch);
  }
  return grid;
}

}  // namespace mealgen
