#pragma once

#include <string>
#include <vector>

#include "core/tensor.hpp"
#include "vocab/vocab.hpp"

namespace mealgen::vocab {

// Ingredient embedding table. Row 0 is the reserved pad/unknown row (all
// zeros); canonical token i lives at row i+1 to match
// IngredientVocabulary::encode_index.
struct EmbeddingTable {
  long dim = 300;
  Tensor vectors;  // [n_tokens + 1, dim]

  long rows() const { return vectors.empty() ? 0 : vectors.dim(0); }
  long n_tokens() const { return rows() - 1; }
  const double* row(long i) const { return vectors.data() + i * dim; }

  // Binary layout: magic "MGINGEB1", u32 row count (including pad row),
  // u32 dim, then row-major float32 values.
  void save(const std::string& path) const;
  static EmbeddingTable load(const std::string& path);
};

struct EmbeddingTrainConfig {
  long dim = 300;
  int epochs = 5;
  int negatives = 5;
  double lr = 0.05;
  uint64_t seed = 1;
};

// Skip-gram with negative sampling; every recipe's canonical-id list is one
// context window. Indices use the encode convention (0 = pad, skipped).
EmbeddingTable train_embeddings(const std::vector<std::vector<int>>& recipes, long n_tokens,
                                const EmbeddingTrainConfig& cfg);

// All unordered token pairs with cosine >= threshold, sorted by similarity
// descending (ties by pair), decision = pending. Pad row excluded.
std::vector<MergeProposal> propose_fusions(const EmbeddingTable& table,
                                           const std::vector<std::string>& tokens,
                                           double threshold);

}  // namespace mealgen::vocab
