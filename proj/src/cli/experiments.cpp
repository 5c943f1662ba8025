#include "cli/experiments.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>
#include <sstream>

#include "core/serial.hpp"
#include "metrics/metrics.hpp"
#include "retrieval/retrieval.hpp"

namespace mealgen::cli {

namespace fs = std::filesystem;

namespace {

struct SplitView {
  std::vector<const data::Recipe*> recipes;
  std::vector<std::vector<int>> tokens;
  std::vector<std::string> refs;
};

SplitView gather(const data::DatasetManifest& manifest, data::Split split,
                 const vocab::IngredientVocabulary& vocab, data::ImageStore& store,
                 const std::string& category = "") {
  SplitView v;
  for (const auto* r : manifest.split(split)) {
    if (!category.empty() && r->category != category) continue;
    if (r->image_refs.empty() || store.load(r->image_refs.front()) == nullptr) continue;
    v.recipes.push_back(r);
    v.tokens.push_back(vocab.encode(r->ingredients));
    v.refs.push_back(r->image_refs.front());
  }
  return v;
}

json aggregate_json(const retrieval::AggregateResult& a) {
  json j;
  j["medr_mean"] = a.medr_mean;
  j["medr_std"] = a.medr_std;
  for (const auto& [k, v] : a.recall_mean) j["r@" + std::to_string(k)] = v;
  return j;
}

}  // namespace

json assoc_eval(const data::DatasetManifest& manifest, const std::string& base_dir,
                assoc::AssocModel& model, const vocab::IngredientVocabulary& vocab,
                const AssocEvalConfig& cfg) {
  data::ImageStore store(base_dir);
  SplitView v = gather(manifest, cfg.split, vocab, store);
  require(!v.tokens.empty(), "assoc_eval: empty split");
  Tensor p = assoc::encode_recipes(model, v.tokens);
  Tensor feats = assoc::extract_features(model.img.backbone, store, v.refs);
  Tensor q = model.img.forward_feats(feats);
  const long pool = std::min<long>(cfg.pool_size, static_cast<long>(v.tokens.size()));
  const auto eval = retrieval::evaluate_pairs(q, p, pool, cfg.repetitions, cfg.seed);
  json out;
  out["kind"] = "assoc-eval";
  out["split"] = data::split_name(cfg.split);
  out["pool_size"] = pool;
  out["repetitions"] = cfg.repetitions;
  out["im2recipe"] = aggregate_json(eval.im2recipe);
  out["recipe2im"] = aggregate_json(eval.recipe2im);
  return out;
}

json attention_export(const data::DatasetManifest& manifest, assoc::AssocModel& model,
                      const vocab::IngredientVocabulary& vocab, data::Split split, long limit) {
  json out = json::array();
  for (const auto* r : manifest.split(split)) {
    if (static_cast<long>(out.size()) >= limit) break;
    const std::vector<std::vector<int>> tokens = {vocab.encode(r->ingredients)};
    model.txt.forward(tokens);
    const Tensor& alpha = model.txt.last_alpha();
    json entry;
    entry["id"] = r->id;
    entry["ingredients"] = r->ingredients;
    json weights = json::array();
    for (size_t t = 0; t < r->ingredients.size(); ++t)
      weights.push_back(alpha[static_cast<long>(t)]);
    entry["attention"] = weights;
    out.push_back(entry);
  }
  return out;
}

json gan_eval(const data::DatasetManifest& manifest, const std::string& base_dir,
              gan::GanModel& model, assoc::AssocModel& assoc_model,
              const vocab::IngredientVocabulary& vocab, synth::PresenceOracle& oracle,
              const synth::BenchMeta& bench_meta, const GanEvalConfig& cfg) {
  data::ImageStore store(base_dir);
  SplitView v = gather(manifest, cfg.split, vocab, store, cfg.category);
  const long n_split = static_cast<long>(v.tokens.size());
  require(n_split >= 2, "gan_eval: split too small");
  Tensor p_all = assoc::encode_recipes(assoc_model, v.tokens);
  const long D = assoc_model.cfg.joint_dim;
  const long K = oracle.cfg.k;

  Rng rng(cfg.seed);

  // ---- generated-sample metrics: IS, FID (oracle features), presence F1
  const long n_gen = cfg.n_images;
  metrics::StatsAccumulator fake_stats(oracle.cfg.hidden), real_stats(oracle.cfg.hidden);
  Tensor class_probs({n_gen, K});
  long tp = 0, fp = 0, fn = 0, tp_s = 0, fp_s = 0, fn_s = 0;
  std::vector<long> gen_src(static_cast<size_t>(n_gen));
  for (long i = 0; i < n_gen; ++i) gen_src[static_cast<size_t>(i)] = static_cast<long>(rng() % static_cast<uint64_t>(n_split));
  const long chunk = 25;
  for (long start = 0; start < n_gen; start += chunk) {
    const long bn = std::min(chunk, n_gen - start);
    Tensor p({bn, D});
    for (long i = 0; i < bn; ++i) {
      const long src = gen_src[static_cast<size_t>(start + i)];
      std::copy(p_all.data() + src * D, p_all.data() + (src + 1) * D, p.data() + i * D);
    }
    auto imgs = gan::generate_from(model, p, derive_seed(cfg.seed, 100 + static_cast<uint64_t>(start)),
                                   /*sample_c=*/true);
    Tensor probs = oracle.predict(imgs.v2);
    Tensor dist = oracle.class_distribution(imgs.v2);
    fake_stats.add_batch(oracle.hidden_features(imgs.v2));
    for (long i = 0; i < bn; ++i) {
      const long row = start + i;
      for (long k = 0; k < K; ++k) class_probs[row * K + k] = dist[i * K + k];
      const long src = gen_src[static_cast<size_t>(row)];
      const long shuffled_src = gen_src[static_cast<size_t>((row + 1) % n_gen)];
      const auto label = bench_meta.visible_label(v.recipes[static_cast<size_t>(src)]->ingredients);
      const auto wrong_label =
          bench_meta.visible_label(v.recipes[static_cast<size_t>(shuffled_src)]->ingredients);
      for (long k = 0; k < K; ++k) {
        const bool pred = probs[i * K + k] > 0.5;
        tp += pred && label[static_cast<size_t>(k)];
        fp += pred && !label[static_cast<size_t>(k)];
        fn += !pred && label[static_cast<size_t>(k)];
        tp_s += pred && wrong_label[static_cast<size_t>(k)];
        fp_s += pred && !wrong_label[static_cast<size_t>(k)];
        fn_s += !pred && wrong_label[static_cast<size_t>(k)];
      }
    }
  }
  for (long start = 0; start < std::min(n_gen, n_split); start += chunk) {
    const long bn = std::min(chunk, std::min(n_gen, n_split) - start);
    std::vector<std::string> refs(v.refs.begin() + start, v.refs.begin() + start + bn);
    real_stats.add_batch(oracle.hidden_features(store.batch(refs, oracle.cfg.input_size)));
  }
  const auto [is_mean, is_std] = metrics::inception_score(class_probs, cfg.is_splits);
  const double fid_val = metrics::fid(real_stats.finalize(), fake_stats.finalize());
  auto f1 = [](long tp_, long fp_, long fn_) {
    return 2.0 * static_cast<double>(tp_) /
           std::max(1.0, 2.0 * static_cast<double>(tp_) + static_cast<double>(fp_) +
                             static_cast<double>(fn_));
  };

  // ---- fake -> recipe retrieval over a fixed pool, resampled z
  const long pool = std::min<long>(cfg.medr_pool, n_split);
  Tensor p_pool({pool, D});
  for (long i = 0; i < pool; ++i)
    std::copy(p_all.data() + i * D, p_all.data() + (i + 1) * D, p_pool.data() + i * D);
  std::vector<int> truth(static_cast<size_t>(pool));
  std::iota(truth.begin(), truth.end(), 0);
  std::vector<double> medrs;
  for (int rep = 0; rep < cfg.medr_reps; ++rep) {
    Tensor q_fake({pool, D});
    for (long start = 0; start < pool; start += chunk) {
      const long bn = std::min(chunk, pool - start);
      Tensor p({bn, D});
      for (long i = 0; i < bn; ++i)
        std::copy(p_pool.data() + (start + i) * D, p_pool.data() + (start + i + 1) * D,
                  p.data() + i * D);
      auto imgs = gan::generate_from(
          model, p, derive_seed(cfg.seed, 9000 + static_cast<uint64_t>(rep * 1000 + start)),
          /*sample_c=*/true);
      Tensor enc_in = data::resize_to(imgs.v2, assoc_model.cfg.image_size);
      Tensor q = assoc_model.img.forward_images(enc_in);
      std::copy(q.data(), q.data() + q.size(), q_fake.data() + start * D);
    }
    medrs.push_back(retrieval::rank_queries(q_fake, p_pool, truth).medr);
  }
  double medr_mean = 0.0;
  for (double m : medrs) medr_mean += m;
  medr_mean /= static_cast<double>(medrs.size());
  double medr_var = 0.0;
  for (double m : medrs) medr_var += (m - medr_mean) * (m - medr_mean);
  medr_var /= static_cast<double>(medrs.size());

  json out;
  out["kind"] = "gan-eval";
  out["category"] = cfg.category.empty() ? "all" : cfg.category;
  out["split"] = data::split_name(cfg.split);
  out["n_images"] = n_gen;
  out["is_mean"] = is_mean;
  out["is_std"] = is_std;
  out["fid"] = fid_val;
  out["f1_matched"] = f1(tp, fp, fn);
  out["f1_shuffled"] = f1(tp_s, fp_s, fn_s);
  out["medr_pool"] = pool;
  out["fake2recipe_medr_mean"] = medr_mean;
  out["fake2recipe_medr_std"] = std::sqrt(medr_var);
  return out;
}

// ------------------------------------------------------------ grids

namespace {

ImageU8 images_row(const Tensor& batch, int size) {
  std::vector<ImageU8> tiles;
  const long per = 3L * size * size;
  for (long i = 0; i < batch.dim(0); ++i) {
    Tensor one({3, size, size});
    std::copy(batch.data() + i * per, batch.data() + (i + 1) * per, one.data());
    tiles.push_back(tensor_to_image(one));
  }
  return tile_grid(tiles, 1);
}

void write_grid_outputs(const std::string& out_prefix, const gan::MultiScaleImages& imgs,
                        int base_scale, const json& sidecar) {
  if (out_prefix.empty()) return;
  const Tensor* vs[3] = {&imgs.v0, &imgs.v1, &imgs.v2};
  for (int k = 0; k < 3; ++k) {
    const int size = base_scale << k;
    write_ppm(out_prefix + "_s" + std::to_string(size) + ".ppm", images_row(*vs[k], size));
  }
  write_json_file(out_prefix + ".json", sidecar);
}

}  // namespace

ImageU8 grid_fixed_z(gan::GanModel& model, assoc::AssocModel& assoc_model,
                     const vocab::IngredientVocabulary& vocab,
                     const std::vector<data::Recipe>& recipes, uint64_t z_seed,
                     const std::string& out_prefix) {
  require(recipes.size() >= 2, "grid_fixed_z: need at least 2 recipes");
  std::vector<std::vector<int>> tokens;
  for (const auto& r : recipes) tokens.push_back(vocab.encode(r.ingredients));
  Tensor p = assoc::encode_recipes(assoc_model, tokens);
  auto cs = model.ca.forward(p, /*sample=*/false, nullptr);
  // one shared noise row
  Tensor z1 = gan::make_noise(1, model.cfg.z_dim, z_seed);
  Tensor z({p.dim(0), static_cast<long>(model.cfg.z_dim)});
  for (long i = 0; i < p.dim(0); ++i)
    std::copy(z1.data(), z1.data() + model.cfg.z_dim, z.data() + i * model.cfg.z_dim);
  auto imgs = model.gen.forward(z, cs.c, /*train=*/false);
  json sidecar;
  sidecar["mode"] = "fixed_z";
  sidecar["z_seed"] = z_seed;
  for (const auto& r : recipes) sidecar["recipe_ids"].push_back(r.id);
  write_grid_outputs(out_prefix, imgs, model.cfg.base_scale, sidecar);
  return images_row(imgs.v2, model.cfg.base_scale * 4);
}

ImageU8 grid_fixed_c(gan::GanModel& model, assoc::AssocModel& assoc_model,
                     const vocab::IngredientVocabulary& vocab, const data::Recipe& recipe,
                     int num_z, uint64_t z_seed, const std::string& out_prefix) {
  require(num_z >= 1, "grid_fixed_c: num_z must be >= 1");
  const std::vector<std::vector<int>> tokens = {vocab.encode(recipe.ingredients)};
  Tensor p1 = assoc::encode_recipes(assoc_model, tokens);
  Tensor p({num_z, p1.dim(1)});
  for (int i = 0; i < num_z; ++i)
    std::copy(p1.data(), p1.data() + p1.dim(1), p.data() + static_cast<long>(i) * p1.dim(1));
  auto cs = model.ca.forward(p, /*sample=*/false, nullptr);
  Tensor z = gan::make_noise(num_z, model.cfg.z_dim, z_seed);
  auto imgs = model.gen.forward(z, cs.c, /*train=*/false);
  json sidecar;
  sidecar["mode"] = "fixed_c";
  sidecar["z_seed"] = z_seed;
  sidecar["recipe_id"] = recipe.id;
  sidecar["num_z"] = num_z;
  write_grid_outputs(out_prefix, imgs, model.cfg.base_scale, sidecar);
  return images_row(imgs.v2, model.cfg.base_scale * 4);
}

// ------------------------------------------------------------ interpolation

namespace {

double remaining_overlap(const std::set<std::string>& with_set,
                         const std::set<std::string>& without_set, const std::string& target) {
  std::set<std::string> rest = with_set;
  rest.erase(target);
  if (rest.empty() && without_set.empty()) return 1.0;
  long shared = 0;
  for (const auto& t : rest) shared += without_set.count(t) > 0 ? 1 : 0;
  const double denom = static_cast<double>(std::max(rest.size(), without_set.size()));
  return denom == 0.0 ? 1.0 : static_cast<double>(shared) / denom;
}

}  // namespace

std::vector<InterpPair> mine_interp_pairs(const data::DatasetManifest& manifest, data::Split split,
                                          const std::string& target, double min_overlap,
                                          long max_pairs) {
  std::vector<const data::Recipe*> with_t, without_t;
  for (const auto* r : manifest.split(split)) {
    const bool has = std::find(r->ingredients.begin(), r->ingredients.end(), target) !=
                     r->ingredients.end();
    (has ? with_t : without_t).push_back(r);
  }
  std::vector<InterpPair> pairs;
  for (const auto* a : with_t) {
    const std::set<std::string> sa(a->ingredients.begin(), a->ingredients.end());
    for (const auto* b : without_t) {
      const std::set<std::string> sb(b->ingredients.begin(), b->ingredients.end());
      const double ov = remaining_overlap(sa, sb, target);
      if (ov >= min_overlap) pairs.push_back({a->id, b->id, target, ov});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const InterpPair& x, const InterpPair& y) {
    if (x.overlap != y.overlap) return x.overlap > y.overlap;
    if (x.id_with != y.id_with) return x.id_with < y.id_with;
    return x.id_without < y.id_without;
  });
  if (max_pairs > 0 && static_cast<long>(pairs.size()) > max_pairs) pairs.resize(static_cast<size_t>(max_pairs));
  return pairs;
}

InterpResult interpolate(gan::GanModel& model, assoc::AssocModel& assoc_model,
                         const vocab::IngredientVocabulary& vocab, const data::Recipe& with_target,
                         const data::Recipe& without_target, const std::string& target, int steps,
                         uint64_t z_seed, synth::PresenceOracle* oracle,
                         const synth::BenchMeta* bench_meta, double min_overlap) {
  require(steps >= 2, "interpolate: need at least 2 points");
  const std::set<std::string> sa(with_target.ingredients.begin(), with_target.ingredients.end());
  const std::set<std::string> sb(without_target.ingredients.begin(),
                                 without_target.ingredients.end());
  require(sa.count(target) > 0, "interpolate: recipe " + with_target.id +
                                    " does not contain the target ingredient '" + target + "'");
  require(sb.count(target) == 0, "interpolate: recipe " + without_target.id +
                                     " already contains the target ingredient '" + target + "'");
  const double ov = remaining_overlap(sa, sb, target);
  {
    std::ostringstream msg;
    msg << "interpolate: remaining-ingredient overlap " << ov << " is below the required "
        << min_overlap;
    require(ov >= min_overlap, msg.str());
  }

  const std::vector<std::vector<int>> tokens = {vocab.encode(with_target.ingredients),
                                                vocab.encode(without_target.ingredients)};
  Tensor pq = assoc::encode_recipes(assoc_model, tokens);
  const long D = pq.dim(1);

  InterpResult res;
  Tensor p({steps, D});
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps - 1);
    res.points.push_back(t);
    for (long e = 0; e < D; ++e) p[k * D + e] = (1.0 - t) * pq[e] + t * pq[D + e];
  }
  auto cs = model.ca.forward(p, /*sample=*/false, nullptr);
  Tensor z1 = gan::make_noise(1, model.cfg.z_dim, z_seed);
  Tensor z({steps, static_cast<long>(model.cfg.z_dim)});
  for (int k = 0; k < steps; ++k)
    std::copy(z1.data(), z1.data() + model.cfg.z_dim, z.data() + static_cast<long>(k) * model.cfg.z_dim);
  auto imgs = model.gen.forward(z, cs.c, /*train=*/false);

  const int top = model.cfg.base_scale * 4;
  std::vector<ImageU8> tiles;
  const long per = 3L * top * top;
  for (int k = 0; k < steps; ++k) {
    Tensor one({3, top, top});
    std::copy(imgs.v2.data() + k * per, imgs.v2.data() + (k + 1) * per, one.data());
    tiles.push_back(tensor_to_image(one));
  }
  res.strip = tile_grid(tiles, steps);

  if (oracle != nullptr && bench_meta != nullptr) {
    const int gi = bench_meta->palette.index_of(target);
    require(gi >= 0, "interpolate: target '" + target + "' is not a benchmark glyph");
    Tensor probs = oracle->predict(imgs.v2);
    for (int k = 0; k < steps; ++k)
      res.target_probs.push_back(probs[static_cast<long>(k) * oracle->cfg.k + gi]);
  }
  return res;
}

// ------------------------------------------------------------ report

namespace {

std::string fixed(double v, int prec = 4) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(prec);
  ss << v;
  return ss.str();
}

std::string pad(const std::string& s, size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

}  // namespace

std::string report_tables(const std::vector<std::string>& run_dirs) {
  std::vector<std::pair<std::string, json>> assoc_rows, gan_rows;
  std::vector<std::string> missing;
  for (const auto& dir : run_dirs) {
    const std::string path = (fs::path(dir) / "metrics.json").string();
    if (!fs::exists(path)) {
      missing.push_back(dir);
      continue;
    }
    const json m = read_json_file(path);
    const std::string name = fs::path(dir).filename().string();
    if (m.value("kind", "") == "assoc-eval" || m.contains("im2recipe"))
      assoc_rows.emplace_back(name, m);
    else if (m.value("kind", "") == "gan-eval" || m.contains("is_mean"))
      gan_rows.emplace_back(name, m);
    else
      missing.push_back(dir + " (unrecognized metrics)");
  }

  std::ostringstream out;
  if (!assoc_rows.empty()) {
    out << "retrieval (im2recipe | recipe2im)\n";
    out << pad("run", 28) << pad("pool", 7);
    for (int rep = 0; rep < 2; ++rep)
      out << pad("MedR", 9) << pad("R@1", 8) << pad("R@5", 8) << pad("R@10", 8);
    out << "\n";
    for (const auto& [name, m] : assoc_rows) {
      out << pad(name, 28) << pad(std::to_string(m["pool_size"].get<long>()), 7);
      for (const char* dir2 : {"im2recipe", "recipe2im"}) {
        const json& d = m[dir2];
        out << pad(fixed(d["medr_mean"].get<double>(), 1), 9)
            << pad(fixed(d["r@1"].get<double>()), 8) << pad(fixed(d["r@5"].get<double>()), 8)
            << pad(fixed(d["r@10"].get<double>()), 8);
      }
      out << "\n";
    }
    out << "\n";
  }
  if (!gan_rows.empty()) {
    out << "image quality / conditioning\n";
    out << pad("run", 28) << pad("IS", 16) << pad("FID", 10) << pad("MedR", 10) << pad("F1", 8)
        << "\n";
    const long pool = gan_rows.front().second["medr_pool"].get<long>();
    out << pad("random", 28) << pad("-", 16) << pad("-", 10)
        << pad(fixed(static_cast<double>(pool) / 2.0, 1), 10) << pad("-", 8) << "\n";
    for (const auto& [name, m] : gan_rows) {
      out << pad(name, 28)
          << pad(fixed(m["is_mean"].get<double>(), 2) + " +- " + fixed(m["is_std"].get<double>(), 2),
                 16)
          << pad(fixed(m["fid"].get<double>(), 2), 10)
          << pad(fixed(m["fake2recipe_medr_mean"].get<double>(), 1), 10)
          << pad(fixed(m.value("f1_matched", 0.0), 3), 8) << "\n";
    }
    out << "\n";
  }
  if (!missing.empty()) {
    out << "missing metrics\n";
    for (const auto& m : missing) out << "  " << m << "\n";
  }
  return out.str();
}

// ------------------------------------------------------------ RunLock

RunLock::RunLock(const std::string& run_dir) {
  fs::create_directories(run_dir);
  path_ = (fs::path(run_dir) / ".lock").string();
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  require(fd >= 0, "run directory is locked by another process: " + run_dir);
  ::close(fd);
}

RunLock::~RunLock() { ::unlink(path_.c_str()); }

}  // namespace mealgen::cli
