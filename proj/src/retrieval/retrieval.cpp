#include "retrieval/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/check.hpp"
#include "core/rng.hpp"

namespace mealgen::retrieval {

double median_rank(std::vector<int> ranks) {
  require(!ranks.empty(), "median_rank: empty");
  std::sort(ranks.begin(), ranks.end());
  return static_cast<double>(ranks[(ranks.size() - 1) / 2]);
}

namespace {

Tensor normalized_rows(const Tensor& x) {
  const long n = x.dim(0), d = x.dim(1);
  Tensor y = x;
  for (long i = 0; i < n; ++i) {
    double s = 0.0;
    for (long e = 0; e < d; ++e) s += x[i * d + e] * x[i * d + e];
    if (s > 0.0) {
      const double inv = 1.0 / std::sqrt(s);
      for (long e = 0; e < d; ++e) y[i * d + e] *= inv;
    }
  }
  return y;
}

}  // namespace

RetrievalResult rank_queries(const Tensor& queries, const Tensor& pool,
                             const std::vector<int>& truth, const std::vector<int>& ks) {
  require(queries.ndim() == 2 && pool.ndim() == 2, "rank_queries: want 2-d inputs");
  require(queries.dim(1) == pool.dim(1), "rank_queries: dimension mismatch");
  require(pool.dim(0) >= 1, "rank_queries: empty pool");
  const long Q = queries.dim(0), P = pool.dim(0), D = queries.dim(1);
  require(static_cast<long>(truth.size()) == Q, "rank_queries: truth must cover every query");

  const Tensor qn = normalized_rows(queries);
  const Tensor pn = normalized_rows(pool);
  Tensor scores({Q, P});
  scores.mat(Q, P).noalias() = qn.mat(Q, D) * pn.mat(P, D).transpose();

  RetrievalResult res;
  res.ranks.resize(static_cast<size_t>(Q));
  for (long q = 0; q < Q; ++q) {
    const int t = truth[static_cast<size_t>(q)];
    require(t >= 0 && t < P, "rank_queries: truth index out of range");
    const double* row = scores.data() + q * P;
    const double st = row[t];
    long rank = 1;
    for (long j = 0; j < P; ++j) {
      if (row[j] > st || (row[j] == st && j < t)) ++rank;
    }
    res.ranks[static_cast<size_t>(q)] = static_cast<int>(rank);
  }
  res.medr = median_rank(res.ranks);
  for (int k : ks) {
    long hit = 0;
    for (int r : res.ranks)
      if (r <= k) ++hit;
    res.recall_at[k] = static_cast<double>(hit) / static_cast<double>(Q);
  }
  return res;
}

namespace {

AggregateResult aggregate(const std::vector<RetrievalResult>& reps, long pool_size,
                          const std::vector<int>& ks) {
  AggregateResult agg;
  agg.pool_size = pool_size;
  agg.repetitions = static_cast<int>(reps.size());
  const double n = static_cast<double>(reps.size());
  double sum = 0.0, sq = 0.0;
  for (const auto& r : reps) {
    sum += r.medr;
    sq += r.medr * r.medr;
  }
  agg.medr_mean = sum / n;
  agg.medr_std = std::sqrt(std::max(0.0, sq / n - agg.medr_mean * agg.medr_mean));
  for (int k : ks) {
    double s = 0.0, s2 = 0.0;
    for (const auto& r : reps) {
      const double v = r.recall_at.at(k);
      s += v;
      s2 += v * v;
    }
    agg.recall_mean[k] = s / n;
    agg.recall_std[k] = std::sqrt(std::max(0.0, s2 / n - agg.recall_mean[k] * agg.recall_mean[k]));
  }
  return agg;
}

}  // namespace

PairedEval evaluate_pairs(const Tensor& img, const Tensor& txt, long pool_size, int repetitions,
                          uint64_t seed, const std::vector<int>& ks) {
  require(img.ndim() == 2 && txt.ndim() == 2 && img.dim(0) == txt.dim(0) &&
              img.dim(1) == txt.dim(1),
          "evaluate_pairs: paired embeddings must be same shape");
  const long N = img.dim(0), D = img.dim(1);
  require(pool_size >= 1 && repetitions >= 1, "evaluate_pairs: bad arguments");
  require(N >= pool_size, "evaluate_pairs: insufficient pairs: have " + std::to_string(N) +
                              ", need " + std::to_string(pool_size));

  Rng rng(seed);
  std::vector<long> all(static_cast<size_t>(N));
  std::iota(all.begin(), all.end(), 0L);
  std::vector<RetrievalResult> i2r, r2i;
  std::vector<int> truth(static_cast<size_t>(pool_size));
  std::iota(truth.begin(), truth.end(), 0);
  for (int rep = 0; rep < repetitions; ++rep) {
    std::shuffle(all.begin(), all.end(), rng);
    Tensor pi({pool_size, D}), pt({pool_size, D});
    for (long i = 0; i < pool_size; ++i) {
      const long src = all[static_cast<size_t>(i)];
      std::copy(img.data() + src * D, img.data() + (src + 1) * D, pi.data() + i * D);
      std::copy(txt.data() + src * D, txt.data() + (src + 1) * D, pt.data() + i * D);
    }
    i2r.push_back(rank_queries(pi, pt, truth, ks));
    r2i.push_back(rank_queries(pt, pi, truth, ks));
  }
  return {aggregate(i2r, pool_size, ks), aggregate(r2i, pool_size, ks)};
}

}  // namespace mealgen::retrieval
