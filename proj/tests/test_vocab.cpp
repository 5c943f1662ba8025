#include <doctest.h>

#include <filesystem>
#include <set>

#include "core/check.hpp"
#include "data/recipe.hpp"
#include "vocab/embedding.hpp"
#include "vocab/stemmer.hpp"
#include "vocab/vocab.hpp"

using namespace mealgen;
namespace fs = std::filesystem;

namespace {

data::Recipe recipe_with(const std::string& id, std::vector<std::string> ingredients) {
  data::Recipe r;
  r.id = id;
  r.ingredients = std::move(ingredients);
  r.instructions_count = 1;
  r.image_refs = {"x.ppm"};
  return r;
}

}  // namespace

TEST_CASE("porter stemmer merges the expected ingredient forms") {
  CHECK(vocab::porter_stem("tomatoes") == vocab::porter_stem("tomato"));
  CHECK(vocab::porter_stem("berries") == vocab::porter_stem("berry"));
  CHECK(vocab::porter_stem("flour") == "flour");
  CHECK(vocab::porter_stem("eggs") == vocab::porter_stem("egg"));
  CHECK(vocab::porter_stem("onions") == vocab::porter_stem("onion"));
  // compound tokens stem their head word
  CHECK(vocab::stem_token("cherry_tomatoes") == vocab::stem_token("cherry_tomato"));
}

TEST_CASE("frequency_cut ordering and errors") {
  SUBCASE("frequency order") {
    std::vector<data::Recipe> rs = {recipe_with("1", {"a", "a", "a", "b"})};
    CHECK(vocab::frequency_cut(rs, 1) == std::vector<std::string>{"a"});
  }
  SUBCASE("ties break lexicographically") {
    std::vector<data::Recipe> rs = {recipe_with("1", {"b", "a"}), recipe_with("2", {"a", "b"})};
    CHECK(vocab::frequency_cut(rs, 1) == std::vector<std::string>{"a"});
  }
  SUBCASE("top 4000 of a large synthetic corpus") {
    std::vector<data::Recipe> rs;
    for (int i = 0; i < 4500; ++i) {
      // token i appears 1 + (4500 - i) / 10 times so frequencies decay
      std::vector<std::string> ing;
      for (int k = 0; k < 1 + (4500 - i) / 1000; ++k) ing.push_back("tok" + std::to_string(i));
      rs.push_back(recipe_with(std::to_string(i), ing));
    }
    auto kept = vocab::frequency_cut(rs, 4000);
    CHECK(kept.size() == 4000);
    CHECK(std::set<std::string>(kept.begin(), kept.end()).size() == 4000);
  }
  SUBCASE("empty corpus is an error") {
    std::vector<data::Recipe> rs;
    CHECK_THROWS_AS(vocab::frequency_cut(rs, 10), Error);
  }
}

TEST_CASE("stem_merge picks the most frequent surface form") {
  std::map<std::string, long> freq{{"tomatoes", 10}, {"tomato", 4}, {"flour", 7}};
  auto merged = vocab::stem_merge({"tomatoes", "tomato", "flour"}, freq);
  CHECK(merged.at("tomatoes") == "tomatoes");
  CHECK(merged.at("tomato") == "tomatoes");
  CHECK(merged.at("flour") == "flour");
}

TEST_CASE("propose_fusions equals a brute-force pairwise oracle") {
  Rng rng(31);
  vocab::EmbeddingTable table;
  table.dim = 16;
  const long n = 10;
  table.vectors = Tensor::randn({n + 1, 16}, rng);
  for (long e = 0; e < 16; ++e) table.vectors[e] = 0.0;  // pad row
  std::vector<std::string> tokens;
  for (long i = 0; i < n; ++i) tokens.push_back("t" + std::to_string(i));

  const double threshold = 0.2;
  auto proposals = vocab::propose_fusions(table, tokens, threshold);

  // independent O(n^2) oracle
  std::set<std::pair<std::string, std::string>> expected;
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) {
      double dot = 0, ni = 0, nj = 0;
      for (long e = 0; e < 16; ++e) {
        const double a = table.vectors[(i + 1) * 16 + e], b = table.vectors[(j + 1) * 16 + e];
        dot += a * b;
        ni += a * a;
        nj += b * b;
      }
      if (dot / std::sqrt(ni * nj) >= threshold)
        expected.insert(std::minmax(tokens[static_cast<size_t>(i)], tokens[static_cast<size_t>(j)]));
    }
  std::set<std::pair<std::string, std::string>> got;
  for (const auto& p : proposals) {
    got.insert({p.token_a, p.token_b});
    CHECK(p.decision == vocab::MergeProposal::Decision::pending);
    CHECK(p.similarity >= threshold);
  }
  CHECK(got == expected);
  // sorted by similarity descending
  for (size_t i = 1; i < proposals.size(); ++i)
    CHECK(proposals[i - 1].similarity >= proposals[i].similarity);

  SUBCASE("identical rows propose similarity 1") {
    for (long e = 0; e < 16; ++e) table.vectors[2 * 16 + e] = table.vectors[1 * 16 + e];
    auto props = vocab::propose_fusions(table, tokens, 0.999);
    REQUIRE(!props.empty());
    CHECK(props.front().similarity == doctest::Approx(1.0));
  }
  SUBCASE("orthogonal rows propose nothing at 0.9") {
    vocab::EmbeddingTable ortho;
    ortho.dim = 4;
    ortho.vectors = Tensor({3, 4});
    ortho.vectors[1 * 4 + 0] = 1.0;
    ortho.vectors[2 * 4 + 1] = 1.0;
    CHECK(vocab::propose_fusions(ortho, {"a", "b"}, 0.9).empty());
  }
  SUBCASE("threshold must be in (0,1]") {
    CHECK_THROWS_AS(vocab::propose_fusions(table, tokens, 0.0), Error);
    CHECK_THROWS_AS(vocab::propose_fusions(table, tokens, 1.5), Error);
  }
}

namespace {

// six-token fixture shared by the union-find tests; frequencies fix the
// representatives deterministically
std::vector<data::Recipe> six_token_corpus() {
  std::vector<data::Recipe> rs;
  auto add = [&](const std::string& tok, int copies) {
    for (int i = 0; i < copies; ++i)
      rs.push_back(recipe_with(tok + std::to_string(i), {tok}));
  };
  add("alpha", 6);
  add("bravo", 5);
  add("charlie", 4);
  add("delta", 3);
  add("echo", 2);
  add("foxtrot", 1);
  return rs;
}

std::vector<vocab::MergeProposal> proposals_for(const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<vocab::MergeProposal> out;
  for (const auto& [a, b] : pairs) {
    auto [lo, hi] = std::minmax(a, b);
    out.push_back({lo, hi, 0.9, vocab::MergeProposal::Decision::pending});
  }
  return out;
}

}  // namespace

TEST_CASE("apply_decisions: union-find over accepted pairs") {
  auto corpus = six_token_corpus();
  auto builder = vocab::VocabBuilder::build(corpus, 100);
  REQUIRE(builder.tokens.size() == 6);

  SUBCASE("all rejected leaves the vocabulary unchanged") {
    auto props = proposals_for({{"alpha", "bravo"}});
    auto v = builder.finalize({{"alpha", "bravo", false}}, props, corpus);
    CHECK(v.canonical.size() == 6);
  }

  SUBCASE("accepting (a,b) and (b,c) unions transitively") {
    auto props = proposals_for({{"alpha", "bravo"}, {"bravo", "charlie"}});
    auto v = builder.finalize({{"alpha", "bravo", true}, {"bravo", "charlie", true}}, props, corpus);
    CHECK(v.canonical.size() == 4);
    const int ia = v.canonical_index("alpha");
    CHECK(v.canonical_index("bravo") == ia);
    CHECK(v.canonical_index("charlie") == ia);
    CHECK(v.canonical[static_cast<size_t>(ia)] == "alpha");  // most frequent representative
  }

  SUBCASE("hand-traced six-token fixture with two accepts") {
    // accept (bravo,charlie) and (echo,foxtrot):
    //   classes {alpha} {bravo,charlie} {delta} {echo,foxtrot}
    //   representatives: alpha, bravo, delta, echo
    //   class frequencies: 6, 9, 3, 3 -> order bravo(9), alpha(6), delta(3), echo(3)
    auto props = proposals_for({{"bravo", "charlie"}, {"echo", "foxtrot"}});
    auto v = builder.finalize({{"bravo", "charlie", true}, {"echo", "foxtrot", true}}, props, corpus);
    REQUIRE(v.canonical.size() == 4);
    CHECK(v.canonical[0] == "bravo");
    CHECK(v.canonical[1] == "alpha");
    CHECK(v.canonical[2] == "delta");
    CHECK(v.canonical[3] == "echo");
    CHECK(v.canonical_index("charlie") == 0);
    CHECK(v.canonical_index("foxtrot") == 3);
    CHECK(v.coverage == doctest::Approx(1.0));
  }

  SUBCASE("unknown pair is rejected by name") {
    auto props = proposals_for({{"alpha", "bravo"}});
    CHECK_THROWS_WITH_AS(builder.finalize({{"alpha", "delta", true}}, props, corpus),
                         doctest::Contains("alpha, delta"), Error);
  }

  SUBCASE("coverage never drops when merges are accepted") {
    auto corpus_with_rare = corpus;
    corpus_with_rare.push_back(recipe_with("rare", {"zebra"}));  // falls below the cut
    auto b2 = vocab::VocabBuilder::build(corpus_with_rare, 6);
    auto props = proposals_for({{"alpha", "bravo"}});
    auto before = b2.finalize({}, props, corpus_with_rare);
    auto after = b2.finalize({{"alpha", "bravo", true}}, props, corpus_with_rare);
    CHECK(after.coverage >= before.coverage);
    CHECK(before.coverage < 1.0);  // the rare token is uncovered
  }
}

TEST_CASE("vocabulary and decisions file round trips") {
  auto corpus = six_token_corpus();
  auto builder = vocab::VocabBuilder::build(corpus, 100);
  auto props = proposals_for({{"bravo", "charlie"}});
  auto v = builder.finalize({{"bravo", "charlie", true}}, props, corpus);

  const std::string vp = (fs::temp_directory_path() / "mg_vocab.txt").string();
  v.save(vp);
  auto v2 = vocab::IngredientVocabulary::load(vp);
  CHECK(v2.canonical == v.canonical);
  CHECK(v2.raw_to_canonical == v.raw_to_canonical);
  CHECK(v2.content_hash() == v.content_hash());
  fs::remove(vp);

  const std::string dp = (fs::temp_directory_path() / "mg_decisions.tsv").string();
  std::vector<vocab::MergeDecision> ds = {{"bravo", "charlie", true}, {"alpha", "delta", false}};
  vocab::save_decisions(dp, ds);
  auto ds2 = vocab::load_decisions(dp);
  REQUIRE(ds2.size() == 2);
  CHECK(ds2[0].accept);
  CHECK_FALSE(ds2[1].accept);
  fs::remove(dp);

  // unknown raw strings encode to the reserved pad index
  CHECK(v.encode_index("never_seen") == 0);
  CHECK(v.encode_index("charlie") == v.canonical_index("charlie") + 1);
}

TEST_CASE("train_embeddings: co-occurrence drives similarity") {
  // tokens 1,2 always co-occur inside a rich shared context; tokens 3,4
  // never appear together and live in disjoint contexts, so the ordering
  // cos(1,2) > cos(3,4) is forced
  std::vector<std::vector<int>> recipes;
  for (int i = 0; i < 40; ++i) {
    recipes.push_back({1, 2, 5, 6, 7, 8});
    recipes.push_back({3, 9, 10});
    recipes.push_back({4, 11, 12});
  }
  vocab::EmbeddingTrainConfig cfg;
  cfg.dim = 16;
  cfg.epochs = 10;
  cfg.seed = 5;
  auto table = vocab::train_embeddings(recipes, 12, cfg);
  CHECK(table.rows() == 13);
  CHECK(table.dim == 16);

  auto cos_rows = [&](long a, long b) {
    double dot = 0, na = 0, nb = 0;
    for (long e = 0; e < table.dim; ++e) {
      dot += table.row(a)[e] * table.row(b)[e];
      na += table.row(a)[e] * table.row(a)[e];
      nb += table.row(b)[e] * table.row(b)[e];
    }
    return dot / std::sqrt(na * nb);
  };
  CHECK(cos_rows(1, 2) > cos_rows(3, 4));

  // determinism and the documented default width
  auto table2 = vocab::train_embeddings(recipes, 6, cfg);
  for (long i = 0; i < table.vectors.size(); ++i) CHECK(table.vectors[i] == table2.vectors[i]);
  vocab::EmbeddingTrainConfig def;
  CHECK(def.dim == 300);

  CHECK_THROWS_AS(vocab::train_embeddings(recipes, 0, cfg), Error);

  // binary table round trip (float32 storage)
  const std::string tp = (fs::temp_directory_path() / "mg_table.bin").string();
  table.save(tp);
  auto back = vocab::EmbeddingTable::load(tp);
  CHECK(back.rows() == table.rows());
  for (long i = 0; i < table.vectors.size(); ++i)
    CHECK(back.vectors[i] == doctest::Approx(table.vectors[i]).epsilon(1e-6));
  fs::remove(tp);
}
