#pragma once

#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace mealgen {

using json = nlohmann::json;

// Checkpoint container: a JSON header plus named double tensors.
struct TensorFile {
  json meta;
  std::map<std::string, Tensor> tensors;  // ordered; serialization is byte-stable

  void save(const std::string& path) const;
  static TensorFile load(const std::string& path);

  const Tensor& get(const std::string& name) const;
};

// FNV-1a over a file's bytes; used to fingerprint checkpoints and vocabularies.
uint64_t file_hash(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Serialize JSON with a fixed layout (sorted keys, 2-space indent, '\n' EOF).
void write_json_file(const std::string& path, const json& j);
json read_json_file(const std::string& path);

}  // namespace mealgen
