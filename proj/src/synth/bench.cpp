#include "synth/bench.hpp"

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "core/check.hpp"
#include "core/rng.hpp"
#include "core/serial.hpp"

namespace mealgen::synth {

namespace fs = std::filesystem;

data::DatasetManifest build_benchmark(const BenchConfig& cfg, const std::string& out_dir) {
  require(cfg.num_recipes >= 1, "build_benchmark: num_recipes must be >= 1");
  require(cfg.min_subset >= 1 && cfg.max_subset >= cfg.min_subset &&
              cfg.max_subset <= cfg.k_visible,
          "build_benchmark: bad subset size range");
  require(cfg.images_per_recipe >= 1 && cfg.images_per_recipe <= 5,
          "build_benchmark: images_per_recipe must be in [1,5]");

  const Palette palette = Palette::make(cfg.k_visible, cfg.k_invisible);
  const int max_scale = *std::max_element(cfg.scales.begin(), cfg.scales.end());
  for (int s : cfg.scales) fs::create_directories(fs::path(out_dir) / "images" / ("s" + std::to_string(s)));

  Rng rng(derive_seed(cfg.seed, 0xbe9c));
  std::vector<int> visible_ids;
  for (size_t i = 0; i < palette.glyphs.size(); ++i)
    if (palette.glyphs[i].visible) visible_ids.push_back(static_cast<int>(i));

  std::vector<data::Recipe> recipes;
  for (int i = 0; i < cfg.num_recipes; ++i) {
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "sr%06d", i);
    const std::string id = idbuf;

    const int size = cfg.min_subset +
                     static_cast<int>(rng() % static_cast<uint64_t>(cfg.max_subset - cfg.min_subset + 1));
    std::vector<int> pool = visible_ids;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<int> subset(pool.begin(), pool.begin() + size);
    for (size_t g = 0; g < palette.glyphs.size(); ++g)
      if (!palette.glyphs[g].visible && unit_uniform(rng) < 0.25) subset.push_back(static_cast<int>(g));
    std::shuffle(subset.begin(), subset.end(), rng);

    data::Recipe r;
    r.id = id;
    for (int gi : subset) r.ingredients.push_back(palette.glyphs[static_cast<size_t>(gi)].name);
    r.instructions_count = 1 + static_cast<int>(rng() % 10);
    r.category = cfg.category;

    for (int v = 0; v < cfg.images_per_recipe; ++v) {
      SynthRecipe sr;
      sr.id = id;
      sr.subset = subset;
      sr.layout_seed = derive_seed(cfg.seed, fnv1a64(id) + static_cast<uint64_t>(v) * 1000003ULL);
      for (int s : cfg.scales) {
        const ImageU8 img = render(sr, palette, s);
        const std::string rel =
            "images/s" + std::to_string(s) + "/" + id + "_v" + std::to_string(v) + ".ppm";
        write_ppm((fs::path(out_dir) / rel).string(), img);
        if (s == max_scale) r.image_refs.push_back(rel);
      }
    }
    recipes.push_back(std::move(r));
  }

  data::DatasetManifest manifest =
      data::assign_splits(data::filter_recipes(std::move(recipes)), cfg.fractions, cfg.seed);
  manifest.save((fs::path(out_dir) / "manifest.jsonl").string());

  BenchMeta meta{cfg, palette};
  meta.save(out_dir);
  return manifest;
}

void BenchMeta::save(const std::string& bench_dir) const {
  json j;
  j["schema"] = "mealgen-synthbench-v1";
  j["num_recipes"] = cfg.num_recipes;
  j["k_visible"] = cfg.k_visible;
  j["k_invisible"] = cfg.k_invisible;
  j["min_subset"] = cfg.min_subset;
  j["max_subset"] = cfg.max_subset;
  j["images_per_recipe"] = cfg.images_per_recipe;
  j["scales"] = cfg.scales;
  j["fractions"] = cfg.fractions;
  j["seed"] = cfg.seed;
  j["category"] = cfg.category;
  json glyphs = json::array();
  for (const auto& g : palette.glyphs) {
    json gj;
    gj["name"] = g.name;
    gj["rgb"] = g.rgb;
    gj["shape"] = g.shape;
    gj["visible"] = g.visible;
    glyphs.push_back(gj);
  }
  j["palette"] = glyphs;
  write_json_file((fs::path(bench_dir) / "synth_meta.json").string(), j);
}

BenchMeta BenchMeta::load(const std::string& bench_dir) {
  const json j = read_json_file((fs::path(bench_dir) / "synth_meta.json").string());
  require(j.value("schema", "") == "mealgen-synthbench-v1",
          "synth_meta: unknown schema in " + bench_dir);
  BenchMeta m;
  m.cfg.num_recipes = j["num_recipes"].get<int>();
  m.cfg.k_visible = j["k_visible"].get<int>();
  m.cfg.k_invisible = j["k_invisible"].get<int>();
  m.cfg.min_subset = j["min_subset"].get<int>();
  m.cfg.max_subset = j["max_subset"].get<int>();
  m.cfg.images_per_recipe = j["images_per_recipe"].get<int>();
  m.cfg.scales = j["scales"].get<std::vector<int>>();
  const auto f = j["fractions"].get<std::vector<double>>();
  m.cfg.fractions = {f[0], f[1], f[2]};
  m.cfg.seed = j["seed"].get<uint64_t>();
  m.cfg.category = j["category"].get<std::string>();
  for (const auto& gj : j["palette"]) {
    Glyph g;
    g.name = gj["name"].get<std::string>();
    const auto rgb = gj["rgb"].get<std::vector<int>>();
    g.rgb = {static_cast<uint8_t>(rgb[0]), static_cast<uint8_t>(rgb[1]),
             static_cast<uint8_t>(rgb[2])};
    g.shape = gj["shape"].get<int>();
    g.visible = gj["visible"].get<bool>();
    m.palette.glyphs.push_back(std::move(g));
  }
  return m;
}

std::vector<int> BenchMeta::visible_label(const std::vector<std::string>& ingredients) const {
  std::vector<int> label(static_cast<size_t>(palette.visible_count()), 0);
  for (const auto& name : ingredients) {
    const int idx = palette.index_of(name);
    if (idx >= 0 && palette.glyphs[static_cast<size_t>(idx)].visible)
      label[static_cast<size_t>(idx)] = 1;  // visible glyphs precede invisible ones
  }
  return label;
}

double BenchMeta::target_marginal() const {
  const double mean_size = 0.5 * (cfg.min_subset + cfg.max_subset);
  return mean_size / static_cast<double>(cfg.k_visible);
}

std::string image_ref_at_scale(const std::string& ref, int scale) {
  // swap the s<digits> path component
  const size_t pos = ref.find("/s");
  require(pos != std::string::npos, "image_ref_at_scale: unexpected ref " + ref);
  const size_t end = ref.find('/', pos + 1);
  require(end != std::string::npos, "image_ref_at_scale: unexpected ref " + ref);
  return ref.substr(0, pos) + "/s" + std::to_string(scale) + ref.substr(end);
}

}  // namespace mealgen::synth
