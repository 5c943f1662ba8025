#include "data/recipe.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <unordered_map>

#include "core/check.hpp"
#include "core/rng.hpp"

namespace mealgen::data {

using nlohmann::json;

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "val") return Split::val;
  if (name == "test") return Split::test;
  throw Error("unknown split name: " + name);
}

CorpusFormat corpus_format_from_name(const std::string& name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "recipe1m") return CorpusFormat::recipe1m;
  throw Error("unknown corpus format: " + name);
}

namespace {

std::vector<std::string> string_list(const json& arr) {
  std::vector<std::string> out;
  for (const auto& item : arr) {
    if (item.is_string())
      out.push_back(item.get<std::string>());
    else if (item.is_object() && item.contains("text"))
      out.push_back(item["text"].get<std::string>());
    else
      throw Error("expected string or {text: ...}");
  }
  return out;
}

Recipe recipe_from_json(const json& j, const std::string& where) {
  Recipe r;
  if (!j.contains("id") || !j["id"].is_string())
    throw Error(where + ": missing mandatory field 'id'");
  r.id = j["id"].get<std::string>();
  const std::string ctx = where + " (record " + r.id + ")";
  if (!j.contains("ingredients"))
    throw Error(ctx + ": missing mandatory field 'ingredients'");
  try {
    r.ingredients = string_list(j["ingredients"]);
  } catch (const std::exception&) {
    throw Error(ctx + ": malformed field 'ingredients'");
  }
  if (j.contains("instructions_count"))
    r.instructions_count = j["instructions_count"].get<int>();
  else if (j.contains("instructions"))
    r.instructions_count = static_cast<int>(j["instructions"].size());
  if (j.contains("images")) r.image_refs = string_list(j["images"]);
  if (j.contains("split")) r.split = split_from_name(j["split"].get<std::string>());
  if (j.contains("category")) r.category = j["category"].get<std::string>();
  return r;
}

json recipe_to_json(const Recipe& r) {
  json j;
  j["id"] = r.id;
  j["ingredients"] = r.ingredients;
  j["instructions_count"] = r.instructions_count;
  j["images"] = r.image_refs;
  if (r.split) j["split"] = split_name(*r.split);
  if (!r.category.empty()) j["category"] = r.category;
  return j;
}

std::vector<Recipe> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "load_corpus: cannot open " + path);
  std::vector<Recipe> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      throw Error(path + ": line " + std::to_string(lineno) + ": malformed JSON: " + e.what());
    }
    out.push_back(recipe_from_json(j, path + ": line " + std::to_string(lineno)));
  }
  return out;
}

}  // namespace

std::vector<Recipe> load_recipe1m_layers(const std::string& recipe_layer_path,
                                         const std::string& image_layer_path) {
  json recipes_layer, images_layer;
  try {
    std::ifstream in(recipe_layer_path);
    require(in.good(), "load_corpus: cannot open " + recipe_layer_path);
    in >> recipes_layer;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(recipe_layer_path + ": malformed JSON: " + e.what());
  }
  try {
    std::ifstream in(image_layer_path);
    require(in.good(), "load_corpus: cannot open " + image_layer_path);
    in >> images_layer;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(image_layer_path + ": malformed JSON: " + e.what());
  }
  require(recipes_layer.is_array(), recipe_layer_path + ": expected a JSON array");
  require(images_layer.is_array(), image_layer_path + ": expected a JSON array");

  std::unordered_map<std::string, std::vector<std::string>> images_by_id;
  long idx = 0;
  for (const auto& entry : images_layer) {
    ++idx;
    if (!entry.contains("id") || !entry["id"].is_string())
      throw Error(image_layer_path + ": record " + std::to_string(idx) +
                  ": missing mandatory field 'id'");
    std::vector<std::string> refs;
    if (entry.contains("images"))
      for (const auto& im : entry["images"]) {
        if (im.is_string())
          refs.push_back(im.get<std::string>());
        else if (im.is_object() && im.contains("id"))
          refs.push_back(im["id"].get<std::string>());
        else if (im.is_object() && im.contains("url"))
          refs.push_back(im["url"].get<std::string>());
      }
    images_by_id[entry["id"].get<std::string>()] = std::move(refs);
  }

  std::vector<Recipe> out;
  idx = 0;
  for (const auto& entry : recipes_layer) {
    ++idx;
    Recipe r = recipe_from_json(entry, recipe_layer_path + ": record " + std::to_string(idx));
    auto it = images_by_id.find(r.id);
    if (it != images_by_id.end()) r.image_refs = it->second;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Recipe> load_corpus(const std::string& path, CorpusFormat format) {
  if (format == CorpusFormat::jsonl) return load_jsonl(path);
  // recipe1m: path names a directory holding layer1.json (recipes) and
  // layer2.json (images)
  return load_recipe1m_layers(path + "/layer1.json", path + "/layer2.json");
}

std::vector<Recipe> filter_recipes(std::vector<Recipe> recipes) {
  std::vector<Recipe> out;
  out.reserve(recipes.size());
  for (auto& r : recipes) {
    const size_t n_ingr = r.ingredients.size();
    if (r.image_refs.empty()) continue;
    if (n_ingr < 1 || n_ingr > 20) continue;
    if (r.instructions_count < 1 || r.instructions_count > 20) continue;
    if (r.image_refs.size() > 5) r.image_refs.resize(5);
    out.push_back(std::move(r));
  }
  return out;
}

DatasetManifest assign_splits(std::vector<Recipe> recipes, std::array<double, 3> fractions,
                              uint64_t seed) {
  double sum = fractions[0] + fractions[1] + fractions[2];
  require(std::abs(sum - 1.0) < 1e-9, "assign_splits: fractions must sum to 1");
  for (double f : fractions) require(f >= 0.0, "assign_splits: negative fraction");

  struct Keyed {
    uint64_t key;
    size_t idx;
  };
  std::vector<Keyed> order(recipes.size());
  for (size_t i = 0; i < recipes.size(); ++i)
    order[i] = {mix64(fnv1a64(recipes[i].id) ^ mix64(seed)), i};
  std::sort(order.begin(), order.end(), [&](const Keyed& a, const Keyed& b) {
    if (a.key != b.key) return a.key < b.key;
    return recipes[a.idx].id < recipes[b.idx].id;
  });

  // largest-remainder rounding of the three split counts
  const long n = static_cast<long>(recipes.size());
  std::array<long, 3> counts{};
  std::array<double, 3> rem{};
  long assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = fractions[static_cast<size_t>(s)] * static_cast<double>(n);
    counts[static_cast<size_t>(s)] = static_cast<long>(std::floor(exact));
    rem[static_cast<size_t>(s)] = exact - std::floor(exact);
    assigned += counts[static_cast<size_t>(s)];
  }
  while (assigned < n) {
    int best = 0;
    for (int s = 1; s < 3; ++s)
      if (rem[static_cast<size_t>(s)] > rem[static_cast<size_t>(best)]) best = s;
    ++counts[static_cast<size_t>(best)];
    rem[static_cast<size_t>(best)] = -1.0;
    ++assigned;
  }

  long pos = 0;
  for (int s = 0; s < 3; ++s)
    for (long k = 0; k < counts[static_cast<size_t>(s)]; ++k, ++pos)
      recipes[order[static_cast<size_t>(pos)].idx].split = static_cast<Split>(s);

  DatasetManifest m;
  m.recipes = std::move(recipes);
  m.fractions = fractions;
  m.seed = seed;
  std::sort(m.recipes.begin(), m.recipes.end(),
            [](const Recipe& a, const Recipe& b) { return a.id < b.id; });
  return m;
}

std::vector<const Recipe*> DatasetManifest::split(Split s) const {
  std::vector<const Recipe*> out;
  for (const auto& r : recipes)
    if (r.split && *r.split == s) out.push_back(&r);
  return out;
}

void DatasetManifest::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "manifest: cannot open " + path + " for writing");
  json header;
  header["schema"] = "mealgen-manifest-v1";
  header["seed"] = seed;
  header["fractions"] = fractions;
  header["count"] = recipes.size();
  out << header.dump() << "\n";
  for (const auto& r : recipes) out << recipe_to_json(r).dump() << "\n";
  require(out.good(), "manifest: short write to " + path);
}

DatasetManifest DatasetManifest::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "manifest: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "manifest: empty file " + path);
  json header = json::parse(line);
  require(header.value("schema", "") == "mealgen-manifest-v1",
          "manifest: unknown schema in " + path);
  DatasetManifest m;
  m.seed = header["seed"].get<uint64_t>();
  const auto f = header["fractions"].get<std::vector<double>>();
  require(f.size() == 3, "manifest: bad fractions in " + path);
  m.fractions = {f[0], f[1], f[2]};
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    m.recipes.push_back(
        recipe_from_json(json::parse(line), path + ": line " + std::to_string(lineno)));
    require(m.recipes.back().split.has_value(),
            "manifest: recipe without split at line " + std::to_string(lineno));
  }
  return m;
}

}  // namespace mealgen::data
