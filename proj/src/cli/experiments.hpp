#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gan/train.hpp"
#include "synth/bench.hpp"
#include "synth/oracle.hpp"

namespace mealgen::cli {

using nlohmann::json;

// ------------------------------------------------------------ association eval

struct AssocEvalConfig {
  data::Split split = data::Split::test;
  long pool_size = 500;
  int repetitions = 10;
  uint64_t seed = 17;
};

// Table-style cross-modal retrieval scores (both directions, MedR and R@K).
json assoc_eval(const data::DatasetManifest& manifest, const std::string& base_dir,
                assoc::AssocModel& model, const vocab::IngredientVocabulary& vocab,
                const AssocEvalConfig& cfg);

// Attention traces for a handful of recipes: tokens and their weights.
json attention_export(const data::DatasetManifest& manifest, assoc::AssocModel& model,
                      const vocab::IngredientVocabulary& vocab, data::Split split, long limit);

// ------------------------------------------------------------ gan eval

struct GanEvalConfig {
  data::Split split = data::Split::test;
  long n_images = 500;   // generated samples for IS / FID / F1
  long medr_pool = 300;  // fake -> recipe retrieval pool
  int medr_reps = 5;
  int is_splits = 10;
  uint64_t seed = 33;
  std::string category;
};

// IS and FID against the held-out reals (oracle features), oracle presence
// micro-F1 under true vs shuffled conditioning, and fake->recipe MedR.
json gan_eval(const data::DatasetManifest& manifest, const std::string& base_dir,
              gan::GanModel& model, assoc::AssocModel& assoc_model,
              const vocab::IngredientVocabulary& vocab, synth::PresenceOracle& oracle,
              const synth::BenchMeta& bench_meta, const GanEvalConfig& cfg);

// ------------------------------------------------------------ grids

// One row per recipe, all rows share the same z (returns the top-scale grid,
// writes all three scales + sidecar when out_prefix is set).
ImageU8 grid_fixed_z(gan::GanModel& model, assoc::AssocModel& assoc_model,
                     const vocab::IngredientVocabulary& vocab,
                     const std::vector<data::Recipe>& recipes, uint64_t z_seed,
                     const std::string& out_prefix);

// num_z samples of one recipe with varying noise.
ImageU8 grid_fixed_c(gan::GanModel& model, assoc::AssocModel& assoc_model,
                     const vocab::IngredientVocabulary& vocab, const data::Recipe& recipe,
                     int num_z, uint64_t z_seed, const std::string& out_prefix);

// ------------------------------------------------------------ interpolation

struct InterpPair {
  std::string id_with, id_without;
  std::string target;   // glyph/ingredient name
  double overlap = 0.0;  // shared fraction of the remaining ingredients
};

// Exhaustive search for (has-target, lacks-target) recipe pairs sharing at
// least min_overlap of the remaining ingredients.
std::vector<InterpPair> mine_interp_pairs(const data::DatasetManifest& manifest, data::Split split,
                                          const std::string& target, double min_overlap,
                                          long max_pairs);

struct InterpResult {
  std::vector<double> points;        // interpolation fractions, 0 = with-target recipe
  std::vector<double> target_probs;  // oracle probability of the target glyph per point
  ImageU8 strip;                     // top-scale images left to right
};

// Linear sweep between the two recipes' text-side vectors with fixed z and
// deterministic c = mu. Validates the target/overlap precondition.
InterpResult interpolate(gan::GanModel& model, assoc::AssocModel& assoc_model,
                         const vocab::IngredientVocabulary& vocab, const data::Recipe& with_target,
                         const data::Recipe& without_target, const std::string& target, int steps,
                         uint64_t z_seed, synth::PresenceOracle* oracle,
                         const synth::BenchMeta* bench_meta, double min_overlap = 0.7);

// ------------------------------------------------------------ report

// Renders metric JSON files from run directories into aligned text tables;
// runs missing their metrics are listed, never fabricated. The gan table gets
// a pool/2 random-baseline row.
std::string report_tables(const std::vector<std::string>& run_dirs);

// Exclusive lockfile guarding a run directory; released on destruction.
class RunLock {
 public:
  explicit RunLock(const std::string& run_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::string path_;
};

}  // namespace mealgen::cli
