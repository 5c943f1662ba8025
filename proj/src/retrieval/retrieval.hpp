#pragma once

#include <map>
#include <vector>

#include "core/tensor.hpp"

namespace mealgen::retrieval {

struct RetrievalResult {
  std::vector<int> ranks;          // 1-indexed rank of the true item per query
  double medr = 0.0;               // lower median of ranks
  std::map<int, double> recall_at;  // K -> fraction of queries with rank <= K
};

// Lower median: for an even count the smaller of the two central values, so
// MedR stays integral and >= 1 for a single evaluation.
double median_rank(std::vector<int> ranks);

// Ranks each query against the pool by cosine similarity (descending); ties
// broken by pool index. truth[i] is the pool index of query i's true match.
RetrievalResult rank_queries(const Tensor& queries, const Tensor& pool,
                             const std::vector<int>& truth,
                             const std::vector<int>& ks = {1, 5, 10});

struct AggregateResult {
  double medr_mean = 0.0, medr_std = 0.0;
  std::map<int, double> recall_mean, recall_std;
  long pool_size = 0;
  int repetitions = 0;
};

struct PairedEval {
  AggregateResult im2recipe;  // image queries against text pool
  AggregateResult recipe2im;  // text queries against image pool
};

// img/txt are row-aligned paired embeddings [N, D]. Samples `repetitions`
// pools of pool_size pairs (without replacement) and averages MedR and R@K
// over the repetitions, both retrieval directions.
PairedEval evaluate_pairs(const Tensor& img, const Tensor& txt, long pool_size, int repetitions,
                          uint64_t seed, const std::vector<int>& ks = {1, 5, 10});

}  // namespace mealgen::retrieval
