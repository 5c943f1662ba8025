#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>

#include "core/check.hpp"
#include "retrieval/retrieval.hpp"

using namespace mealgen;

TEST_CASE("median_rank takes the lower median") {
  CHECK(retrieval::median_rank({1}) == 1.0);
  CHECK(retrieval::median_rank({1, 2}) == 1.0);
  CHECK(retrieval::median_rank({1, 3, 7, 20}) == 3.0);
  CHECK(retrieval::median_rank({5, 1, 9}) == 5.0);
}

TEST_CASE("rank_queries: exact matches rank first") {
  Rng rng(7);
  Tensor pool = Tensor::randn({30, 8}, rng);
  std::vector<int> truth(30);
  std::iota(truth.begin(), truth.end(), 0);
  auto res = retrieval::rank_queries(pool, pool, truth);
  CHECK(res.medr == 1.0);
  CHECK(res.recall_at.at(1) == 1.0);
  for (int r : res.ranks) CHECK(r == 1);
}

TEST_CASE("rank_queries: engineered ranks give R@5 = 0.5") {
  // pool = standard basis; a query overlapping k distractors at weight 1 and
  // its true item at 0.9 ranks the true item k+1
  const long P = 20, D = 20;
  Tensor pool({P, D});
  for (long i = 0; i < P; ++i) pool[i * D + i] = 1.0;
  const std::vector<int> want_ranks = {1, 3, 7, 20};
  Tensor queries({4, D});
  std::vector<int> truth = {0, 1, 2, 3};
  for (int q = 0; q < 4; ++q) {
    const int distractors = want_ranks[static_cast<size_t>(q)] - 1;
    queries[q * D + truth[static_cast<size_t>(q)]] = 0.9;
    int placed = 0;
    for (long j = 0; j < P && placed < distractors; ++j) {
      if (j == truth[static_cast<size_t>(q)]) continue;
      queries[q * D + j] = 1.0;
      ++placed;
    }
  }
  auto res = retrieval::rank_queries(queries, pool, truth, {1, 5, 10});
  CHECK(res.ranks == want_ranks);
  CHECK(res.recall_at.at(5) == doctest::Approx(0.5));
  CHECK(res.medr == 3.0);

  // non-decreasing recall in K
  CHECK(res.recall_at.at(1) <= res.recall_at.at(5));
  CHECK(res.recall_at.at(5) <= res.recall_at.at(10));
}

TEST_CASE("rank_queries rejects dimension mismatches") {
  Tensor q({2, 4}), pool({3, 5});
  CHECK_THROWS_AS(retrieval::rank_queries(q, pool, {0, 1}), Error);
}

TEST_CASE("random ranking: mean MedR approaches (P+1)/2") {
  Rng rng(11);
  const long P = 200;
  double total = 0.0;
  std::vector<int> truth(P);
  std::iota(truth.begin(), truth.end(), 0);
  for (int rep = 0; rep < 100; ++rep) {
    Tensor queries = Tensor::randn({P, 16}, rng);
    Tensor pool = Tensor::randn({P, 16}, rng);
    total += retrieval::rank_queries(queries, pool, truth).medr;
  }
  const double mean = total / 100.0;
  const double expect = (static_cast<double>(P) + 1.0) / 2.0;
  CHECK(std::abs(mean - expect) / expect < 0.10);
}

TEST_CASE("ranking is invariant under a common rotation") {
  Rng rng(13);
  const long P = 50, D = 16;
  Tensor queries = Tensor::randn({P, D}, rng);
  Tensor pool = Tensor::randn({P, D}, rng);
  std::vector<int> truth(P);
  std::iota(truth.begin(), truth.end(), 0);
  auto base = retrieval::rank_queries(queries, pool, truth);

  // random orthogonal matrix via QR
  Eigen::MatrixXd m(D, D);
  for (long i = 0; i < D; ++i)
    for (long j = 0; j < D; ++j) m(i, j) = gauss(rng);
  Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  Tensor rq({P, D}), rp({P, D});
  for (long i = 0; i < P; ++i)
    for (long j = 0; j < D; ++j) {
      double sq = 0, sp = 0;
      for (long k = 0; k < D; ++k) {
        sq += Q(j, k) * queries[i * D + k];
        sp += Q(j, k) * pool[i * D + k];
      }
      rq[i * D + j] = sq;
      rp[i * D + j] = sp;
    }
  auto rotated = retrieval::rank_queries(rq, rp, truth);
  CHECK(rotated.ranks == base.ranks);
}

TEST_CASE("rank_queries equals a brute-force sort oracle") {
  Rng rng(17);
  const long P = 300, Q = 40, D = 12;
  Tensor pool = Tensor::randn({P, D}, rng);
  Tensor queries = Tensor::randn({Q, D}, rng);
  std::vector<int> truth;
  for (long i = 0; i < Q; ++i) truth.push_back(static_cast<int>(rng() % P));
  auto res = retrieval::rank_queries(queries, pool, truth, {1, 5, 10});

  // oracle: full sort with (score desc, index asc)
  for (long q = 0; q < Q; ++q) {
    std::vector<std::pair<double, long>> scored;
    Tensor qv({D});
    std::copy(queries.data() + q * D, queries.data() + (q + 1) * D, qv.data());
    for (long j = 0; j < P; ++j) {
      Tensor pv({D});
      std::copy(pool.data() + j * D, pool.data() + (j + 1) * D, pv.data());
      scored.emplace_back(cosine(qv, pv), j);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    int rank = 0;
    for (size_t pos = 0; pos < scored.size(); ++pos)
      if (scored[pos].second == truth[static_cast<size_t>(q)]) {
        rank = static_cast<int>(pos) + 1;
        break;
      }
    CHECK(res.ranks[static_cast<size_t>(q)] == rank);
  }
}

TEST_CASE("evaluate_pairs: contract errors and determinism") {
  Rng rng(19);
  Tensor img = Tensor::randn({40, 8}, rng);
  Tensor txt = Tensor::randn({40, 8}, rng);
  CHECK_THROWS_WITH_AS(retrieval::evaluate_pairs(img, txt, 100, 2, 1),
                       doctest::Contains("insufficient pairs"), Error);

  auto a = retrieval::evaluate_pairs(img, txt, 20, 5, 123);
  auto b = retrieval::evaluate_pairs(img, txt, 20, 5, 123);
  CHECK(a.im2recipe.medr_mean == b.im2recipe.medr_mean);
  CHECK(a.recipe2im.medr_mean == b.recipe2im.medr_mean);
  CHECK(a.im2recipe.recall_mean.at(5) == b.im2recipe.recall_mean.at(5));
}
