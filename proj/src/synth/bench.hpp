#pragma once

#include <string>
#include <vector>

#include "data/recipe.hpp"
#include "synth/render.hpp"

namespace mealgen::synth {

struct BenchConfig {
  int num_recipes = 1000;
  int k_visible = 8;
  int k_invisible = 0;
  int min_subset = 1, max_subset = 3;  // glyphs per recipe, uniform
  int images_per_recipe = 1;           // distinct layouts, 1..5
  std::vector<int> scales = {16, 32, 64};
  std::array<double, 3> fractions{0.70, 0.15, 0.15};
  uint64_t seed = 7;
  std::string category = "synth";
};

// Rendered benchmark rooted at out_dir: images/s<scale>/<id>_v<k>.ppm per
// scale, manifest.jsonl, and synth_meta.json describing palette and config.
// Recipe image_refs point at the largest-scale renders; lower scales follow
// the same path with the s<scale> directory swapped.
data::DatasetManifest build_benchmark(const BenchConfig& cfg, const std::string& out_dir);

// Benchmark metadata persisted alongside the manifest.
struct BenchMeta {
  BenchConfig cfg;
  Palette palette;

  static BenchMeta load(const std::string& bench_dir);
  void save(const std::string& bench_dir) const;

  // Presence labels over visible glyphs for a recipe's ingredient names.
  std::vector<int> visible_label(const std::vector<std::string>& ingredients) const;

  // Expected per-glyph inclusion frequency implied by the subset-size range.
  double target_marginal() const;
};

// Path of the same image at another rendered scale.
std::string image_ref_at_scale(const std::string& ref, int scale);

}  // namespace mealgen::synth
