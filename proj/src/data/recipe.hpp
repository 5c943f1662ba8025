#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mealgen::data {

enum class Split { train, val, test };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct Recipe {
  std::string id;
  std::vector<std::string> ingredients;
  int instructions_count = 0;
  std::vector<std::string> image_refs;
  std::optional<Split> split;
  std::string category;  // optional tag used for subset training

  bool operator==(const Recipe&) const = default;
};

enum class CorpusFormat { jsonl, recipe1m };

CorpusFormat corpus_format_from_name(const std::string& name);

// Raw ingest: no filtering, unknown fields ignored. Malformed records raise
// an error carrying the line number (jsonl) or record index, and the record
// id when one was parsed.
std::vector<Recipe> load_corpus(const std::string& path, CorpusFormat format);

// Recipe1M-style layered corpus: a recipe layer and an image layer joined on id.
std::vector<Recipe> load_recipe1m_layers(const std::string& recipe_layer_path,
                                         const std::string& image_layer_path);

// Keeps recipes with >= 1 image, 1..20 ingredients and 1..20 instructions;
// truncates image_refs to 5. Total, order preserving, idempotent.
std::vector<Recipe> filter_recipes(std::vector<Recipe> recipes);

struct DatasetManifest {
  std::vector<Recipe> recipes;  // sorted by id; every recipe has a split
  std::array<double, 3> fractions{0.70, 0.15, 0.15};
  uint64_t seed = 0;

  std::vector<const Recipe*> split(Split s) const;

  void save(const std::string& path) const;
  static DatasetManifest load(const std::string& path);

  bool operator==(const DatasetManifest&) const = default;
};

// Deterministic split assignment: recipes are ordered by a seeded hash of
// their id and cut at the exact fraction boundaries (largest-remainder
// rounding), so counts always match the fractions within rounding.
DatasetManifest assign_splits(std::vector<Recipe> recipes, std::array<double, 3> fractions,
                              uint64_t seed);

}  // namespace mealgen::data
