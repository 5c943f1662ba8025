#include "data/images.hpp"

#include <filesystem>
#include <iostream>

#include "core/check.hpp"
#include "nn/layers.hpp"

namespace mealgen::data {

const ImageU8* ImageStore::load(const std::string& ref) {
  auto it = cache_.find(ref);
  if (it != cache_.end()) return &it->second;
  if (missing_.count(ref)) return nullptr;
  const std::string path = base_dir_.empty() ? ref : base_dir_ + "/" + ref;
  if (!std::filesystem::exists(path)) {
    std::cerr << "warning: missing image file " << path << " (skipping)\n";
    missing_[ref] = true;
    return nullptr;
  }
  auto [pos, ok] = cache_.emplace(ref, read_ppm(path));
  return &pos->second;
}

Tensor resize_to(const Tensor& x, int size) {
  if (x.dim(2) == size && x.dim(3) == size) return x;
  Tensor cur = x;
  while (cur.dim(2) > size && cur.dim(2) % 2 == 0 && cur.dim(2) / 2 >= size &&
         cur.dim(3) % 2 == 0)
    cur = nn::avg_pool2(cur);
  if (cur.dim(2) == size && cur.dim(3) == size) return cur;
  return nn::bilinear_resize(cur, size, size);
}

Tensor ImageStore::batch(const std::vector<std::string>& refs, int size) {
  std::vector<ImageU8> imgs;
  imgs.reserve(refs.size());
  for (const auto& ref : refs) {
    const ImageU8* img = load(ref);
    require(img != nullptr, "image batch: missing file " + ref);
    imgs.push_back(*img);
  }
  return resize_to(images_to_batch(imgs), size);
}

}  // namespace mealgen::data
