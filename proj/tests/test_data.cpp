#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "core/check.hpp"
#include "core/serial.hpp"
#include "data/recipe.hpp"

using namespace mealgen;
namespace fs = std::filesystem;

namespace {

std::string temp_file(const std::string& name, const std::string& content) {
  const std::string path = (fs::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

data::Recipe make_recipe(const std::string& id, int n_ingr, int n_instr, int n_img) {
  data::Recipe r;
  r.id = id;
  for (int i = 0; i < n_ingr; ++i) r.ingredients.push_back("ingr" + std::to_string(i));
  r.instructions_count = n_instr;
  for (int i = 0; i < n_img; ++i) r.image_refs.push_back(id + "_" + std::to_string(i) + ".ppm");
  return r;
}

}  // namespace

TEST_CASE("load_corpus jsonl: pass-through and errors") {
  const std::string good = temp_file("mg_corpus.jsonl",
      R"({"id":"r1","ingredients":["salt","flour"],"instructions_count":3,"images":["a.ppm"]})"
      "\n"
      R"({"id":"r2","ingredients":[{"text":"chicken"}],"instructions":[{"text":"cook"},{"text":"serve"}]})"
      "\n"
      R"({"id":"r3","ingredients":["x"],"instructions_count":1,"images":[]})"
      "\n");
  auto recipes = data::load_corpus(good, data::CorpusFormat::jsonl);
  REQUIRE(recipes.size() == 3);
  CHECK(recipes[0].ingredients.size() == 2);
  CHECK(recipes[1].instructions_count == 2);
  CHECK(recipes[1].ingredients[0] == "chicken");
  CHECK(recipes[2].image_refs.empty());
  fs::remove(good);

  const std::string missing = temp_file("mg_corpus_bad.jsonl",
      R"({"id":"r1","instructions_count":1})" "\n");
  CHECK_THROWS_WITH_AS(data::load_corpus(missing, data::CorpusFormat::jsonl),
                       doctest::Contains("ingredients"), Error);
  fs::remove(missing);

  const std::string malformed = temp_file("mg_corpus_mal.jsonl",
      R"({"id":"r1","ingredients":["a"],"instructions_count":1})" "\n" "{oops\n");
  CHECK_THROWS_WITH_AS(data::load_corpus(malformed, data::CorpusFormat::jsonl),
                       doctest::Contains("line 2"), Error);
  fs::remove(malformed);
}

TEST_CASE("load_corpus recipe1m: layer pair joined on id") {
  const fs::path dir = fs::temp_directory_path() / "mg_r1m";
  fs::create_directories(dir);
  write_text_file((dir / "layer1.json").string(), R"([
    {"id":"a","ingredients":[{"text":"salt"}],"instructions":[{"text":"s1"}]},
    {"id":"b","ingredients":[{"text":"rice"},{"text":"egg"}],"instructions":[{"text":"s1"},{"text":"s2"}]},
    {"id":"c","ingredients":[{"text":"oil"}],"instructions":[{"text":"s1"}]},
    {"id":"d","ingredients":[{"text":"tea"}],"instructions":[{"text":"s1"}]},
    {"id":"e","ingredients":[{"text":"jam"}],"instructions":[{"text":"s1"}]}
  ])");
  write_text_file((dir / "layer2.json").string(), R"([
    {"id":"a","images":[{"id":"a1.jpg"},{"id":"a2.jpg"}]},
    {"id":"c","images":[{"id":"c1.jpg"}]},
    {"id":"zz","images":[{"id":"orphan.jpg"}]},
    {"id":"e","images":[]}
  ])");
  auto recipes = data::load_corpus(dir.string(), data::CorpusFormat::recipe1m);
  REQUIRE(recipes.size() == 5);
  // manual join expectation: a->2 images, b->0, c->1, d->0, e->0
  CHECK(recipes[0].id == "a");
  CHECK(recipes[0].image_refs == std::vector<std::string>{"a1.jpg", "a2.jpg"});
  CHECK(recipes[1].image_refs.empty());
  CHECK(recipes[2].image_refs == std::vector<std::string>{"c1.jpg"});
  CHECK(recipes[3].image_refs.empty());
  CHECK(recipes[4].image_refs.empty());
  fs::remove_all(dir);
}

TEST_CASE("filter_recipes: the three exclusion rules and image truncation") {
  std::vector<data::Recipe> in;
  in.push_back(make_recipe("no_images", 3, 3, 0));      // excluded: no image
  in.push_back(make_recipe("too_many_ingr", 21, 3, 1)); // excluded: 21 ingredients
  in.push_back(make_recipe("too_many_instr", 3, 21, 1));
  in.push_back(make_recipe("zero_ingr", 0, 3, 1));
  in.push_back(make_recipe("keeper", 20, 20, 1));
  in.push_back(make_recipe("many_images", 4, 4, 7));    // retained, trimmed to 5

  auto out = data::filter_recipes(in);
  REQUIRE(out.size() == 2);
  CHECK(out[0].id == "keeper");
  CHECK(out[1].id == "many_images");
  CHECK(out[1].image_refs.size() == 5);

  // idempotent
  auto again = data::filter_recipes(out);
  CHECK(again == out);
}

TEST_CASE("assign_splits: exact counts, determinism, partition") {
  std::vector<data::Recipe> recipes;
  for (int i = 0; i < 100; ++i) recipes.push_back(make_recipe("r" + std::to_string(i), 2, 2, 1));

  auto m = data::assign_splits(recipes, {0.7, 0.15, 0.15}, 42);
  CHECK(m.split(data::Split::train).size() == 70);
  CHECK(m.split(data::Split::val).size() == 15);
  CHECK(m.split(data::Split::test).size() == 15);

  // same seed twice -> identical assignment
  auto m2 = data::assign_splits(recipes, {0.7, 0.15, 0.15}, 42);
  CHECK(m == m2);
  // different seed -> different assignment (overwhelmingly likely)
  auto m3 = data::assign_splits(recipes, {0.7, 0.15, 0.15}, 43);
  CHECK(m != m3);

  // partition: every recipe in exactly one split
  std::set<std::string> seen;
  for (const auto& r : m.recipes) {
    REQUIRE(r.split.has_value());
    CHECK(seen.insert(r.id).second);
  }
  CHECK(seen.size() == 100);

  CHECK_THROWS_AS(data::assign_splits(recipes, {0.5, 0.5, 0.5}, 1), Error);
}

TEST_CASE("manifest persistence round trip is byte stable") {
  std::vector<data::Recipe> recipes;
  for (int i = 0; i < 23; ++i) {
    auto r = make_recipe("rec" + std::to_string(i), 1 + i % 4, 2, 1 + i % 3);
    if (i % 2) r.category = "salad";
    recipes.push_back(r);
  }
  auto m = data::assign_splits(recipes, {0.7, 0.15, 0.15}, 9);
  const std::string p1 = (fs::temp_directory_path() / "mg_manifest1.jsonl").string();
  const std::string p2 = (fs::temp_directory_path() / "mg_manifest2.jsonl").string();
  m.save(p1);
  auto loaded = data::DatasetManifest::load(p1);
  CHECK(loaded == m);
  loaded.save(p2);
  CHECK(read_text_file(p1) == read_text_file(p2));
  fs::remove(p1);
  fs::remove(p2);
}
