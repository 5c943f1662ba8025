#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace mealgen::data {

// Loads recipe images referenced by relative path. Missing files are reported
// with a warning at batch time (once per path) and skipped, not treated as
// manifest errors.
class ImageStore {
 public:
  explicit ImageStore(std::string base_dir) : base_dir_(std::move(base_dir)) {}

  // nullopt when the file is missing; caches the decoded image.
  const ImageU8* load(const std::string& ref);

  // [B,3,size,size] in [-1,1]; exact power-of-two average pooling when the
  // source is a multiple of the target, otherwise bilinear.
  Tensor batch(const std::vector<std::string>& refs, int size);

  const std::string& base_dir() const { return base_dir_; }

 private:
  std::string base_dir_;
  std::map<std::string, ImageU8> cache_;
  std::map<std::string, bool> missing_;
};

Tensor resize_to(const Tensor& chw_batch, int size);

}  // namespace mealgen::data
