#include <doctest.h>

#include <filesystem>
#include <set>

#include "core/check.hpp"
#include "core/serial.hpp"
#include "data/images.hpp"
#include "synth/bench.hpp"
#include "synth/oracle.hpp"
#include "synth/render.hpp"

using namespace mealgen;
namespace fs = std::filesystem;

namespace {

long count_signature_pixels(const ImageU8& img, const std::array<uint8_t, 3>& rgb) {
  long n = 0;
  for (int y = 0; y < img.h; ++y)
    for (int x = 0; x < img.w; ++x)
      if (img.at(y, x, 0) == rgb[0] && img.at(y, x, 1) == rgb[1] && img.at(y, x, 2) == rgb[2]) ++n;
  return n;
}

}  // namespace

TEST_CASE("render: determinism and unknown glyph error") {
  auto palette = synth::Palette::make(6);
  synth::SynthRecipe r{"r1", {0, 3}, 1234};
  const ImageU8 a = synth::render(r, palette, 64);
  const ImageU8 b = synth::render(r, palette, 64);
  CHECK(a.px == b.px);

  synth::SynthRecipe bad{"r2", {99}, 1};
  CHECK_THROWS_AS(synth::render(bad, palette, 64), Error);
}

TEST_CASE("render: signature colors appear for own subset only") {
  auto palette = synth::Palette::make(6);
  synth::SynthRecipe ra{"ra", {0, 1}, 777};
  synth::SynthRecipe rb{"rb", {2, 3}, 778};
  const ImageU8 ia = synth::render(ra, palette, 64);
  const ImageU8 ib = synth::render(rb, palette, 64);
  // disjoint subsets -> disjoint signature colors
  for (int g : {0, 1}) {
    CHECK(count_signature_pixels(ia, palette.glyphs[static_cast<size_t>(g)].rgb) > 0);
    CHECK(count_signature_pixels(ib, palette.glyphs[static_cast<size_t>(g)].rgb) == 0);
  }
  for (int g : {2, 3}) {
    CHECK(count_signature_pixels(ib, palette.glyphs[static_cast<size_t>(g)].rgb) > 0);
    CHECK(count_signature_pixels(ia, palette.glyphs[static_cast<size_t>(g)].rgb) == 0);
  }
}

TEST_CASE("render: adding a glyph adds its signature pixels") {
  auto palette = synth::Palette::make(6);
  synth::SynthRecipe small{"r", {0}, 4242};
  synth::SynthRecipe bigger{"r", {0, 2}, 4242};
  const ImageU8 im_small = synth::render(small, palette, 64);
  const ImageU8 im_big = synth::render(bigger, palette, 64);
  CHECK(count_signature_pixels(im_small, palette.glyphs[2].rgb) == 0);
  CHECK(count_signature_pixels(im_big, palette.glyphs[2].rgb) > 0);
}

TEST_CASE("render: invisible ingredients draw nothing") {
  auto palette = synth::Palette::make(3, 2);
  REQUIRE(palette.glyphs.size() == 5);
  synth::SynthRecipe only_invisible{"r", {3, 4}, 99};
  const ImageU8 img = synth::render(only_invisible, palette, 64);
  for (int g = 0; g < 3; ++g) CHECK(count_signature_pixels(img, palette.glyphs[static_cast<size_t>(g)].rgb) == 0);
}

TEST_CASE("build_benchmark: contract, determinism and marginals") {
  const fs::path dir = fs::temp_directory_path() / "mg_bench_test";
  fs::remove_all(dir);
  synth::BenchConfig cfg;
  cfg.num_recipes = 300;
  cfg.k_visible = 8;
  cfg.min_subset = 1;
  cfg.max_subset = 8;
  cfg.scales = {16, 32, 64};
  cfg.seed = 21;
  auto manifest = synth::build_benchmark(cfg, dir.string());
  CHECK(manifest.recipes.size() == 300);
  for (const auto& r : manifest.recipes) {
    CHECK(r.ingredients.size() >= 1);
    CHECK(r.ingredients.size() <= 8);
    CHECK(r.image_refs.size() == 1);
    CHECK(fs::exists(dir / r.image_refs.front()));
    CHECK(fs::exists(dir / synth::image_ref_at_scale(r.image_refs.front(), 16)));
    CHECK(fs::exists(dir / synth::image_ref_at_scale(r.image_refs.front(), 32)));
  }

  // same seed -> identical manifest bytes
  const fs::path dir2 = fs::temp_directory_path() / "mg_bench_test2";
  fs::remove_all(dir2);
  synth::build_benchmark(cfg, dir2.string());
  CHECK(read_text_file((dir / "manifest.jsonl").string()) ==
        read_text_file((dir2 / "manifest.jsonl").string()));
  fs::remove_all(dir2);
  fs::remove_all(dir);

  // per-glyph marginals approach the configured frequency
  const fs::path dir3 = fs::temp_directory_path() / "mg_bench_marginals";
  fs::remove_all(dir3);
  synth::BenchConfig mcfg;
  mcfg.num_recipes = 8000;
  mcfg.k_visible = 8;
  mcfg.min_subset = 1;
  mcfg.max_subset = 3;
  mcfg.scales = {16};  // keep the render cost down
  mcfg.seed = 5;
  auto m3 = synth::build_benchmark(mcfg, dir3.string());
  auto meta = synth::BenchMeta::load(dir3.string());
  const double target = meta.target_marginal();
  std::vector<long> counts(8, 0);
  for (const auto& r : m3.recipes) {
    const auto label = meta.visible_label(r.ingredients);
    for (int k = 0; k < 8; ++k) counts[static_cast<size_t>(k)] += label[static_cast<size_t>(k)];
  }
  for (int k = 0; k < 8; ++k) {
    const double emp = static_cast<double>(counts[static_cast<size_t>(k)]) /
                       static_cast<double>(mcfg.num_recipes);
    CHECK(std::abs(emp - target) / target < 0.05);
  }
  fs::remove_all(dir3);
}

TEST_CASE("presence oracle: high held-out accuracy on clean renders") {
  const fs::path dir = fs::temp_directory_path() / "mg_oracle_bench";
  fs::remove_all(dir);
  synth::BenchConfig cfg;
  cfg.num_recipes = 360;
  cfg.k_visible = 4;
  cfg.min_subset = 1;
  cfg.max_subset = 2;
  cfg.scales = {64};
  cfg.seed = 3;
  auto manifest = synth::build_benchmark(cfg, dir.string());
  auto meta = synth::BenchMeta::load(dir.string());
  data::ImageStore store(dir.string());

  auto collect = [&](data::Split split, Tensor& images, Tensor& labels) {
    auto recipes = manifest.split(split);
    std::vector<std::string> refs;
    for (const auto* r : recipes) refs.push_back(r->image_refs.front());
    images = store.batch(refs, 64);
    labels = Tensor({static_cast<long>(recipes.size()), 4});
    for (size_t i = 0; i < recipes.size(); ++i) {
      const auto lab = meta.visible_label(recipes[i]->ingredients);
      for (long k = 0; k < 4; ++k) labels[static_cast<long>(i) * 4 + k] = lab[static_cast<size_t>(k)];
    }
  };
  Tensor train_x, train_y, test_x, test_y;
  collect(data::Split::train, train_x, train_y);
  collect(data::Split::test, test_x, test_y);

  synth::OracleConfig ocfg;
  ocfg.k = 4;
  ocfg.epochs = 25;
  ocfg.seed = 7;
  Rng rng(ocfg.seed);
  synth::PresenceOracle oracle(ocfg, rng);
  oracle.train(train_x, train_y);

  Tensor probs = oracle.predict(test_x);
  CHECK(probs.dim(1) == 4);
  long hits = 0;
  for (long i = 0; i < probs.size(); ++i) {
    CHECK(probs[i] >= 0.0);
    CHECK(probs[i] <= 1.0);
    hits += (probs[i] > 0.5) == (test_y[i] == 1.0) ? 1 : 0;
  }
  const double acc = static_cast<double>(hits) / static_cast<double>(probs.size());
  CHECK(acc >= 0.99);

  // checkpoint round trip preserves predictions exactly
  const std::string op = (fs::temp_directory_path() / "mg_oracle.ckpt").string();
  oracle.save(op);
  auto back = synth::PresenceOracle::load(op);
  Tensor probs2 = back.predict(test_x);
  for (long i = 0; i < probs.size(); ++i) CHECK(probs2[i] == probs[i]);
  fs::remove(op);

  // uniform-noise images sit far from saturated predictions
  Rng nrng(8);
  Tensor noise = Tensor::uniform({16, 3, 64, 64}, nrng, -1.0, 1.0);
  Tensor np = oracle.predict(noise);
  double mean = 0.0;
  for (long i = 0; i < np.size(); ++i) mean += np[i];
  mean /= static_cast<double>(np.size());
  CHECK(mean > 0.02);
  CHECK(mean < 0.98);

  // class distribution rows are normalized for IS-style metrics
  Tensor dist = back.class_distribution(test_x);
  for (long i = 0; i < dist.dim(0); ++i) {
    double sum = 0;
    for (long k = 0; k < 4; ++k) sum += dist[i * 4 + k];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  fs::remove_all(dir);
}

TEST_CASE("image_ref_at_scale swaps the scale directory") {
  CHECK(synth::image_ref_at_scale("images/s64/sr000001_v0.ppm", 16) ==
        "images/s16/sr000001_v0.ppm");
  CHECK_THROWS_AS(synth::image_ref_at_scale("noscale.ppm", 16), Error);
}
