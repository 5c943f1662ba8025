// mealgen: experiment runner for ingredient-conditioned meal image synthesis.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "assoc/train.hpp"
#include "cli/experiments.hpp"
#include "core/serial.hpp"
#include "gan/train.hpp"
#include "synth/bench.hpp"
#include "synth/oracle.hpp"
#include "vocab/embedding.hpp"

using namespace mealgen;
namespace fs = std::filesystem;

namespace {

std::string manifest_path(const std::string& bench_dir, const std::string& explicit_path) {
  return explicit_path.empty() ? (fs::path(bench_dir) / "manifest.jsonl").string() : explicit_path;
}

void write_run_config(const std::string& run_dir, const std::string& command, const json& cfg) {
  json out;
  out["command"] = command;
  out["options"] = cfg;
  write_json_file((fs::path(run_dir) / "config.json").string(), out);
}

struct CommonModelArgs {
  std::string bench, manifest, vocab_path, assoc_ckpt;

  data::DatasetManifest load_manifest() const {
    return data::DatasetManifest::load(manifest_path(bench, manifest));
  }
  vocab::IngredientVocabulary load_vocab() const {
    return vocab::IngredientVocabulary::load(vocab_path);
  }
  assoc::AssocModel load_assoc() const { return assoc::AssocModel::load(assoc_ckpt); }

  void add_to(CLI::App* cmd, bool with_assoc) {
    cmd->add_option("--bench", bench, "benchmark/data directory (image base)")->required();
    cmd->add_option("--manifest", manifest, "manifest path (default <bench>/manifest.jsonl)");
    cmd->add_option("--vocab", vocab_path, "vocabulary file")->required();
    if (with_assoc)
      cmd->add_option("--assoc", assoc_ckpt, "association model checkpoint")->required();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mealgen: ingredient-conditioned meal image synthesis"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI/TOML file");

  // ---------------------------------------------------------------- synth build
  auto* synth_cmd = app.add_subcommand("synth", "synthetic benchmark");
  auto* synth_build = synth_cmd->add_subcommand("build", "render a synthetic benchmark");
  synth::BenchConfig bench_cfg;
  std::string synth_out;
  synth_build->add_option("--out", synth_out, "output directory")->required();
  synth_build->add_option("--recipes", bench_cfg.num_recipes, "number of recipes");
  synth_build->add_option("--k", bench_cfg.k_visible, "visible glyph count");
  synth_build->add_option("--k-invisible", bench_cfg.k_invisible, "invisible ingredient count");
  synth_build->add_option("--min-subset", bench_cfg.min_subset, "min glyphs per recipe");
  synth_build->add_option("--max-subset", bench_cfg.max_subset, "max glyphs per recipe");
  synth_build->add_option("--images-per-recipe", bench_cfg.images_per_recipe, "views per recipe");
  synth_build->add_option("--scales", bench_cfg.scales, "rendered scales");
  synth_build->add_option("--seed", bench_cfg.seed, "benchmark seed");
  synth_build->add_option("--category", bench_cfg.category, "category tag");
  synth_build->callback([&]() {
    auto manifest = synth::build_benchmark(bench_cfg, synth_out);
    std::cout << "benchmark: " << manifest.recipes.size() << " recipes in " << synth_out << "\n";
  });

  // ---------------------------------------------------------------- data prepare
  auto* data_cmd = app.add_subcommand("data", "dataset ingest");
  auto* data_prepare = data_cmd->add_subcommand("prepare", "load, filter and split a corpus");
  std::string dp_input, dp_format = "jsonl", dp_out;
  std::vector<double> dp_fractions = {0.70, 0.15, 0.15};
  uint64_t dp_seed = 1;
  data_prepare->add_option("--input", dp_input, "corpus path (file or recipe1m dir)")->required();
  data_prepare->add_option("--format", dp_format, "jsonl | recipe1m");
  data_prepare->add_option("--out", dp_out, "output manifest path")->required();
  data_prepare->add_option("--fractions", dp_fractions, "train/val/test fractions")->expected(3);
  data_prepare->add_option("--seed", dp_seed, "split seed");
  data_prepare->callback([&]() {
    auto raw = data::load_corpus(dp_input, data::corpus_format_from_name(dp_format));
    auto kept = data::filter_recipes(raw);
    auto manifest = data::assign_splits(std::move(kept),
                                        {dp_fractions[0], dp_fractions[1], dp_fractions[2]}, dp_seed);
    manifest.save(dp_out);
    std::cout << "prepared " << manifest.recipes.size() << " of " << raw.size() << " recipes -> "
              << dp_out << "\n";
  });

  // ---------------------------------------------------------------- vocab build
  auto* vocab_cmd = app.add_subcommand("vocab", "ingredient vocabulary");
  auto* vocab_build = vocab_cmd->add_subcommand("build", "canonical vocabulary + embeddings");
  std::string vb_bench, vb_manifest, vb_out, vb_decisions;
  long vb_topk = 4000;
  double vb_threshold = 0.85;
  vocab::EmbeddingTrainConfig vb_embed;
  vocab_build->add_option("--bench", vb_bench, "data directory")->required();
  vocab_build->add_option("--manifest", vb_manifest, "manifest path override");
  vocab_build->add_option("--out-dir", vb_out, "output directory")->required();
  vocab_build->add_option("--top-k", vb_topk, "frequency cut");
  vocab_build->add_option("--threshold", vb_threshold, "fusion proposal cosine threshold");
  vocab_build->add_option("--decisions", vb_decisions, "reviewed decisions file (tsv)");
  vocab_build->add_option("--dim", vb_embed.dim, "embedding width");
  vocab_build->add_option("--epochs", vb_embed.epochs, "embedding epochs");
  vocab_build->add_option("--seed", vb_embed.seed, "embedding seed");
  vocab_build->callback([&]() {
    auto manifest = data::DatasetManifest::load(manifest_path(vb_bench, vb_manifest));
    auto builder = vocab::VocabBuilder::build(manifest.recipes, vb_topk);

    // embeddings over the pre-fusion candidates drive the fusion proposals
    vocab::IngredientVocabulary pre = builder.finalize({}, {}, manifest.recipes);
    std::vector<std::vector<int>> tokenized;
    for (const auto& r : manifest.recipes) tokenized.push_back(pre.encode(r.ingredients));
    auto table = vocab::train_embeddings(tokenized, static_cast<long>(pre.canonical.size()), vb_embed);
    auto proposals = vocab::propose_fusions(table, pre.canonical, vb_threshold);

    std::vector<vocab::MergeDecision> decisions;
    if (!vb_decisions.empty()) decisions = vocab::load_decisions(vb_decisions);
    auto final_vocab = builder.finalize(decisions, proposals, manifest.recipes);

    fs::create_directories(vb_out);
    final_vocab.save((fs::path(vb_out) / "vocab.txt").string());
    vocab::save_proposals((fs::path(vb_out) / "proposals.jsonl").string(), proposals);
    // retrain embeddings over the final canonical ids for downstream use
    std::vector<std::vector<int>> final_tokens;
    for (const auto& r : manifest.recipes) final_tokens.push_back(final_vocab.encode(r.ingredients));
    auto final_table = vocab::train_embeddings(final_tokens,
                                               static_cast<long>(final_vocab.canonical.size()), vb_embed);
    final_table.save((fs::path(vb_out) / "embeddings.bin").string());

    json metrics;
    metrics["kind"] = "vocab-build";
    metrics["canonical"] = final_vocab.canonical.size();
    metrics["coverage"] = final_vocab.coverage;
    metrics["proposals"] = proposals.size();
    metrics["accepted"] = 0;
    for (const auto& d : decisions)
      if (d.accept) metrics["accepted"] = metrics["accepted"].get<int>() + 1;
    write_json_file((fs::path(vb_out) / "metrics.json").string(), metrics);
    std::cout << "vocabulary: " << final_vocab.canonical.size() << " canonical tokens, coverage "
              << final_vocab.coverage << "\n";
  });

  // ---------------------------------------------------------------- backbone pretrain
  auto* backbone_cmd = app.add_subcommand("backbone", "image backbone");
  auto* bb_pretrain = backbone_cmd->add_subcommand("pretrain", "presence-supervised pretraining");
  std::string bb_bench, bb_manifest, bb_out;
  assoc::BackbonePretrainConfig bb_cfg;
  bb_pretrain->add_option("--bench", bb_bench, "benchmark directory")->required();
  bb_pretrain->add_option("--manifest", bb_manifest, "manifest path override");
  bb_pretrain->add_option("--out", bb_out, "output checkpoint path")->required();
  bb_pretrain->add_option("--epochs", bb_cfg.epochs, "epochs");
  bb_pretrain->add_option("--batch", bb_cfg.batch, "batch size");
  bb_pretrain->add_option("--lr", bb_cfg.lr, "learning rate");
  bb_pretrain->add_option("--seed", bb_cfg.seed, "seed");
  bb_pretrain->add_option("--max-images", bb_cfg.max_images, "training image cap");
  bb_pretrain->callback([&]() {
    auto manifest = data::DatasetManifest::load(manifest_path(bb_bench, bb_manifest));
    const double acc = assoc::pretrain_backbone(manifest, bb_bench, bb_cfg, bb_out);
    std::cout << "backbone: held-out presence accuracy " << acc << " -> " << bb_out << "\n";
  });

  // ---------------------------------------------------------------- oracle train
  auto* oracle_cmd = app.add_subcommand("oracle", "presence oracle");
  auto* oracle_train = oracle_cmd->add_subcommand("train", "train the presence oracle");
  std::string ot_bench, ot_manifest, ot_out;
  synth::OracleConfig ot_cfg;
  long ot_max = 3000;
  oracle_train->add_option("--bench", ot_bench, "benchmark directory")->required();
  oracle_train->add_option("--manifest", ot_manifest, "manifest path override");
  oracle_train->add_option("--out", ot_out, "output checkpoint path")->required();
  oracle_train->add_option("--epochs", ot_cfg.epochs, "epochs");
  oracle_train->add_option("--seed", ot_cfg.seed, "seed");
  oracle_train->add_option("--max-images", ot_max, "training image cap");
  oracle_train->callback([&]() {
    auto manifest = data::DatasetManifest::load(manifest_path(ot_bench, ot_manifest));
    auto meta = synth::BenchMeta::load(ot_bench);
    ot_cfg.k = meta.palette.visible_count();
    data::ImageStore store(ot_bench);

    auto gather = [&](data::Split split, long cap, Tensor& x, Tensor& y) {
      std::vector<std::string> refs;
      std::vector<std::vector<int>> labels;
      for (const auto* r : manifest.split(split)) {
        if (cap > 0 && static_cast<long>(refs.size()) >= cap) break;
        refs.push_back(r->image_refs.front());
        labels.push_back(meta.visible_label(r->ingredients));
      }
      x = store.batch(refs, ot_cfg.input_size);
      y = Tensor({static_cast<long>(labels.size()), static_cast<long>(ot_cfg.k)});
      for (size_t i = 0; i < labels.size(); ++i)
        for (int k = 0; k < ot_cfg.k; ++k)
          y[static_cast<long>(i) * ot_cfg.k + k] = labels[i][static_cast<size_t>(k)];
    };
    Tensor train_x, train_y, val_x, val_y;
    gather(data::Split::train, ot_max, train_x, train_y);
    gather(data::Split::val, 500, val_x, val_y);

    Rng rng(ot_cfg.seed);
    synth::PresenceOracle oracle(ot_cfg, rng);
    const double loss = oracle.train(train_x, train_y);
    Tensor probs = oracle.predict(val_x);
    long hits = 0;
    for (long i = 0; i < probs.size(); ++i)
      hits += (probs[i] > 0.5) == (val_y[i] == 1.0) ? 1 : 0;
    oracle.save(ot_out);
    std::cout << "oracle: train loss " << loss << ", held-out accuracy "
              << static_cast<double>(hits) / static_cast<double>(probs.size()) << " -> " << ot_out
              << "\n";
  });

  // ---------------------------------------------------------------- assoc train
  auto* assoc_cmd = app.add_subcommand("assoc", "association model");
  auto* assoc_train = assoc_cmd->add_subcommand("train", "train the association model");
  std::string at_bench, at_manifest, at_vocab, at_embed, at_backbone, at_run;
  assoc::AssocConfig at_model;
  assoc::AssocTrainConfig at_cfg;
  assoc_train->add_option("--bench", at_bench, "data directory")->required();
  assoc_train->add_option("--manifest", at_manifest, "manifest path override");
  assoc_train->add_option("--vocab", at_vocab, "vocabulary file")->required();
  assoc_train->add_option("--embeddings", at_embed, "initial ingredient embedding table");
  assoc_train->add_option("--backbone", at_backbone, "pretrained backbone checkpoint");
  assoc_train->add_option("--run-dir", at_run, "run directory")->required();
  assoc_train->add_option("--embed-dim", at_model.embed_dim, "ingredient embedding width");
  assoc_train->add_option("--lstm-hidden", at_model.lstm_hidden, "per-direction hidden width");
  assoc_train->add_option("--joint-dim", at_model.joint_dim, "shared-space width");
  assoc_train->add_option("--feat-dim", at_model.feat_dim, "backbone pooled width");
  assoc_train->add_option("--image-size", at_model.image_size, "encoder input size");
  assoc_train->add_option("--margin", at_model.margin, "triplet margin");
  assoc_train->add_flag("--attention,!--no-attention", at_model.attention, "attention pooling");
  assoc_train->add_option("--epochs", at_cfg.epochs, "epochs");
  assoc_train->add_option("--batch", at_cfg.batch, "batch size");
  assoc_train->add_option("--lr", at_cfg.lr, "learning rate");
  assoc_train->add_option("--seed", at_cfg.seed, "seed");
  assoc_train->add_option("--val-pool", at_cfg.val_pool, "validation retrieval pool");
  assoc_train->add_option("--val-reps", at_cfg.val_reps, "validation pool resamplings");
  assoc_train->add_option("--eval-every", at_cfg.eval_every, "epochs between validations");
  assoc_train->add_option("--max-train", at_cfg.max_train, "cap on training recipes");
  assoc_train->add_option("--train-eval-pool", at_cfg.train_eval_pool, "track train MedR over this pool");
  assoc_train->add_option("--stop-train-medr", at_cfg.stop_train_medr, "stop once train MedR reaches this");
  assoc_train->callback([&]() {
    cli::RunLock lock(at_run);
    auto manifest = data::DatasetManifest::load(manifest_path(at_bench, at_manifest));
    auto vocab = vocab::IngredientVocabulary::load(at_vocab);
    std::optional<vocab::EmbeddingTable> table;
    if (!at_embed.empty()) {
      table = vocab::EmbeddingTable::load(at_embed);
      at_model.embed_dim = table->dim;
    }
    std::optional<assoc::ConvBackbone> backbone;
    if (!at_backbone.empty()) {
      backbone = assoc::ConvBackbone::load(at_backbone);
      at_model.feat_dim = backbone->feat_dim;
      at_model.image_size = backbone->input_size;
    }
    json cfg_json = at_model.to_json();
    cfg_json["epochs"] = at_cfg.epochs;
    cfg_json["batch"] = at_cfg.batch;
    cfg_json["lr"] = at_cfg.lr;
    cfg_json["seed"] = at_cfg.seed;
    write_run_config(at_run, "assoc train", cfg_json);
    auto res = assoc::train_association(manifest, at_bench, vocab, table ? &*table : nullptr,
                                        backbone ? &*backbone : nullptr, at_model, at_cfg, at_run);
    std::cout << "assoc: " << res.epochs_run << " epochs, final loss " << res.final_loss
              << ", best val MedR " << res.best_val_medr << "\n";
  });

  // ---------------------------------------------------------------- assoc eval
  auto* assoc_eval_cmd = assoc_cmd->add_subcommand("eval", "retrieval evaluation");
  CommonModelArgs ae;
  cli::AssocEvalConfig ae_cfg;
  std::string ae_split = "test", ae_run;
  ae.add_to(assoc_eval_cmd, false);
  assoc_eval_cmd->add_option("--checkpoint", ae.assoc_ckpt, "association checkpoint")->required();
  assoc_eval_cmd->add_option("--run-dir", ae_run, "output run directory")->required();
  assoc_eval_cmd->add_option("--split", ae_split, "train | val | test");
  assoc_eval_cmd->add_option("--pool", ae_cfg.pool_size, "retrieval pool size");
  assoc_eval_cmd->add_option("--reps", ae_cfg.repetitions, "pool resamplings");
  assoc_eval_cmd->add_option("--seed", ae_cfg.seed, "seed");
  assoc_eval_cmd->callback([&]() {
    cli::RunLock lock(ae_run);
    ae_cfg.split = data::split_from_name(ae_split);
    auto manifest = ae.load_manifest();
    auto vocab = ae.load_vocab();
    auto model = ae.load_assoc();
    json out = cli::assoc_eval(manifest, ae.bench, model, vocab, ae_cfg);
    write_json_file((fs::path(ae_run) / "metrics.json").string(), out);
    json cfg_json;
    cfg_json["pool"] = ae_cfg.pool_size;
    cfg_json["reps"] = ae_cfg.repetitions;
    cfg_json["seed"] = ae_cfg.seed;
    cfg_json["split"] = ae_split;
    write_run_config(ae_run, "assoc eval", cfg_json);
    std::cout << cli::report_tables({ae_run});
  });

  // ---------------------------------------------------------------- assoc attention
  auto* assoc_attn = assoc_cmd->add_subcommand("attention", "export attention traces");
  CommonModelArgs aa;
  std::string aa_split = "test", aa_out;
  long aa_limit = 20;
  aa.add_to(assoc_attn, false);
  assoc_attn->add_option("--checkpoint", aa.assoc_ckpt, "association checkpoint")->required();
  assoc_attn->add_option("--split", aa_split, "split to sample");
  assoc_attn->add_option("--limit", aa_limit, "recipes to export");
  assoc_attn->add_option("--out", aa_out, "output JSON path")->required();
  assoc_attn->callback([&]() {
    auto manifest = aa.load_manifest();
    auto vocab = aa.load_vocab();
    auto model = aa.load_assoc();
    json out = cli::attention_export(manifest, model, vocab, data::split_from_name(aa_split), aa_limit);
    write_json_file(aa_out, out);
    std::cout << "attention traces for " << out.size() << " recipes -> " << aa_out << "\n";
  });

  // ---------------------------------------------------------------- gan train
  auto* gan_cmd = app.add_subcommand("gan", "generative model");
  auto* gan_train = gan_cmd->add_subcommand("train", "train the generator stack");
  CommonModelArgs gt;
  gan::GanConfig gt_model;
  gt_model.base_scale = 16;  // desk-scale default; the library default stays 64
  gan::GanTrainConfig gt_cfg;
  std::string gt_run;
  gt.add_to(gan_train, true);
  gan_train->add_option("--run-dir", gt_run, "run directory")->required();
  gan_train->add_option("--steps", gt_cfg.steps, "training steps");
  gan_train->add_option("--batch", gt_cfg.batch, "batch size");
  gan_train->add_option("--base-scale", gt_model.base_scale, "lowest image scale");
  gan_train->add_option("--ngf", gt_model.ngf, "generator width");
  gan_train->add_option("--ndf", gt_model.ndf, "discriminator width");
  gan_train->add_option("--z-dim", gt_model.z_dim, "noise width");
  gan_train->add_option("--c-dim", gt_model.c_dim, "appearance factor width");
  gan_train->add_option("--lambda-uncond", gt_model.lambda_uncond, "unconditional loss weight");
  gan_train->add_option("--lambda-ca", gt_model.lambda_ca, "KL weight");
  gan_train->add_option("--lambda-cycle", gt_model.lambda_cycle, "cycle-consistency weight");
  gan_train->add_option("--lr-g", gt_cfg.lr_g, "generator learning rate");
  gan_train->add_option("--lr-d", gt_cfg.lr_d, "discriminator learning rate");
  gan_train->add_option("--seed", gt_cfg.seed, "seed");
  gan_train->add_option("--grid-every", gt_cfg.grid_every, "steps between sample grids");
  gan_train->add_option("--eval-every", gt_cfg.eval_every, "steps between checkpoints");
  gan_train->add_option("--max-train", gt_cfg.max_train, "cap on training recipes");
  gan_train->add_option("--category", gt_cfg.category, "category filter");
  gan_train->add_option("--oracle", gt_cfg.oracle_path, "presence oracle for snapshots");
  gan_train->callback([&]() {
    cli::RunLock lock(gt_run);
    auto manifest = gt.load_manifest();
    auto vocab = gt.load_vocab();
    auto model = gt.load_assoc();
    require(model.vocab_hash == vocab.content_hash(),
            "gan train: vocabulary does not match the association checkpoint");
    json cfg_json = gt_model.to_json();
    cfg_json["steps"] = gt_cfg.steps;
    cfg_json["batch"] = gt_cfg.batch;
    cfg_json["seed"] = gt_cfg.seed;
    cfg_json["category"] = gt_cfg.category;
    write_run_config(gt_run, "gan train", cfg_json);
    auto res = gan::train_gan(manifest, gt.bench, model, vocab, gt_model, gt_cfg, gt_run,
                              file_hash(gt.assoc_ckpt));
    std::cout << "gan: " << res.steps_run << " steps, d_loss " << res.final_d_loss << ", g_loss "
              << res.final_g_loss << " -> " << res.checkpoint << "\n";
  });

  // ---------------------------------------------------------------- gan eval
  auto* gan_eval_cmd = gan_cmd->add_subcommand("eval", "IS / FID / retrieval evaluation");
  CommonModelArgs ge;
  cli::GanEvalConfig ge_cfg;
  std::string ge_ckpt, ge_oracle, ge_split = "test", ge_run;
  ge.add_to(gan_eval_cmd, true);
  gan_eval_cmd->add_option("--checkpoint", ge_ckpt, "gan checkpoint")->required();
  gan_eval_cmd->add_option("--oracle", ge_oracle, "presence oracle checkpoint")->required();
  gan_eval_cmd->add_option("--run-dir", ge_run, "output run directory")->required();
  gan_eval_cmd->add_option("--split", ge_split, "split to evaluate");
  gan_eval_cmd->add_option("--n-images", ge_cfg.n_images, "generated sample count");
  gan_eval_cmd->add_option("--pool", ge_cfg.medr_pool, "fake->recipe pool size");
  gan_eval_cmd->add_option("--reps", ge_cfg.medr_reps, "retrieval repetitions");
  gan_eval_cmd->add_option("--is-splits", ge_cfg.is_splits, "inception score splits");
  gan_eval_cmd->add_option("--seed", ge_cfg.seed, "seed");
  gan_eval_cmd->add_option("--category", ge_cfg.category, "category filter");
  gan_eval_cmd->callback([&]() {
    cli::RunLock lock(ge_run);
    ge_cfg.split = data::split_from_name(ge_split);
    auto manifest = ge.load_manifest();
    auto vocab = ge.load_vocab();
    auto assoc_model = ge.load_assoc();
    auto model = gan::GanModel::load(ge_ckpt);
    auto oracle = synth::PresenceOracle::load(ge_oracle);
    auto meta = synth::BenchMeta::load(ge.bench);
    json out = cli::gan_eval(manifest, ge.bench, model, assoc_model, vocab, oracle, meta, ge_cfg);
    write_json_file((fs::path(ge_run) / "metrics.json").string(), out);
    json cfg_json;
    cfg_json["n_images"] = ge_cfg.n_images;
    cfg_json["pool"] = ge_cfg.medr_pool;
    cfg_json["seed"] = ge_cfg.seed;
    cfg_json["split"] = ge_split;
    write_run_config(ge_run, "gan eval", cfg_json);
    std::cout << cli::report_tables({ge_run});
  });

  // ---------------------------------------------------------------- grid
  auto* grid_cmd = app.add_subcommand("grid", "qualitative sample grids");
  CommonModelArgs gr;
  std::string gr_ckpt, gr_mode = "fixed-z", gr_out, gr_recipe;
  std::vector<std::string> gr_recipes;
  int gr_num_z = 8;
  uint64_t gr_zseed = 1;
  gr.add_to(grid_cmd, true);
  grid_cmd->add_option("--checkpoint", gr_ckpt, "gan checkpoint")->required();
  grid_cmd->add_option("--mode", gr_mode, "fixed-z | fixed-c");
  grid_cmd->add_option("--recipes", gr_recipes, "recipe ids (fixed-z rows)");
  grid_cmd->add_option("--recipe", gr_recipe, "recipe id (fixed-c)");
  grid_cmd->add_option("--num-z", gr_num_z, "samples for fixed-c");
  grid_cmd->add_option("--z-seed", gr_zseed, "noise seed");
  grid_cmd->add_option("--out", gr_out, "output prefix")->required();
  grid_cmd->callback([&]() {
    auto manifest = gr.load_manifest();
    auto vocab = gr.load_vocab();
    auto assoc_model = gr.load_assoc();
    auto model = gan::GanModel::load(gr_ckpt);
    auto find = [&](const std::string& id) -> const data::Recipe& {
      for (const auto& r : manifest.recipes)
        if (r.id == id) return r;
      throw Error("grid: unknown recipe id " + id);
    };
    if (gr_mode == "fixed-z") {
      std::vector<data::Recipe> rows;
      for (const auto& id : gr_recipes) rows.push_back(find(id));
      cli::grid_fixed_z(model, assoc_model, vocab, rows, gr_zseed, gr_out);
    } else if (gr_mode == "fixed-c") {
      cli::grid_fixed_c(model, assoc_model, vocab, find(gr_recipe), gr_num_z, gr_zseed, gr_out);
    } else {
      throw Error("grid: unknown mode " + gr_mode);
    }
    std::cout << "grid -> " << gr_out << "_s*.ppm\n";
  });

  // ---------------------------------------------------------------- interp
  auto* interp_cmd = app.add_subcommand("interp", "shared-space interpolation");
  CommonModelArgs ip;
  std::string ip_ckpt, ip_with, ip_without, ip_target, ip_oracle, ip_out, ip_split = "test";
  int ip_steps = 5;
  uint64_t ip_zseed = 1;
  bool ip_mine = false;
  long ip_max_pairs = 20;
  double ip_overlap = 0.7;
  ip.add_to(interp_cmd, true);
  interp_cmd->add_option("--checkpoint", ip_ckpt, "gan checkpoint")->required();
  interp_cmd->add_option("--recipe-with", ip_with, "recipe containing the target");
  interp_cmd->add_option("--recipe-without", ip_without, "recipe lacking the target");
  interp_cmd->add_option("--target", ip_target, "target ingredient")->required();
  interp_cmd->add_option("--steps", ip_steps, "interpolation points");
  interp_cmd->add_option("--z-seed", ip_zseed, "noise seed");
  interp_cmd->add_option("--oracle", ip_oracle, "presence oracle for scoring");
  interp_cmd->add_option("--min-overlap", ip_overlap, "required remaining-ingredient overlap");
  interp_cmd->add_flag("--mine", ip_mine, "mine qualifying pairs instead of rendering");
  interp_cmd->add_option("--split", ip_split, "split for mining");
  interp_cmd->add_option("--max-pairs", ip_max_pairs, "mined pair cap");
  interp_cmd->add_option("--out", ip_out, "output prefix");
  interp_cmd->callback([&]() {
    auto manifest = ip.load_manifest();
    if (ip_mine) {
      auto pairs = cli::mine_interp_pairs(manifest, data::split_from_name(ip_split), ip_target,
                                          ip_overlap, ip_max_pairs);
      json out = json::array();
      for (const auto& p : pairs) {
        json pj;
        pj["with"] = p.id_with;
        pj["without"] = p.id_without;
        pj["overlap"] = p.overlap;
        out.push_back(pj);
      }
      std::cout << out.dump(2) << "\n";
      return;
    }
    require(!ip_with.empty() && !ip_without.empty(), "interp: need --recipe-with and --recipe-without");
    auto vocab = ip.load_vocab();
    auto assoc_model = ip.load_assoc();
    auto model = gan::GanModel::load(ip_ckpt);
    auto find = [&](const std::string& id) -> const data::Recipe& {
      for (const auto& r : manifest.recipes)
        if (r.id == id) return r;
      throw Error("interp: unknown recipe id " + id);
    };
    std::unique_ptr<synth::PresenceOracle> oracle;
    std::unique_ptr<synth::BenchMeta> meta;
    if (!ip_oracle.empty()) {
      oracle = std::make_unique<synth::PresenceOracle>(synth::PresenceOracle::load(ip_oracle));
      meta = std::make_unique<synth::BenchMeta>(synth::BenchMeta::load(ip.bench));
    }
    auto res = cli::interpolate(model, assoc_model, vocab, find(ip_with), find(ip_without),
                                ip_target, ip_steps, ip_zseed, oracle.get(), meta.get(), ip_overlap);
    if (!ip_out.empty()) {
      write_ppm(ip_out + "_strip.ppm", res.strip);
      json sidecar;
      sidecar["points"] = res.points;
      sidecar["target"] = ip_target;
      sidecar["z_seed"] = ip_zseed;
      if (!res.target_probs.empty()) sidecar["target_probs"] = res.target_probs;
      write_json_file(ip_out + ".json", sidecar);
    }
    if (!res.target_probs.empty()) {
      std::cout << "target probability along the sweep:";
      for (double v : res.target_probs) std::cout << " " << v;
      std::cout << "\n";
    }
  });

  // ---------------------------------------------------------------- report
  auto* report_cmd = app.add_subcommand("report", "metric tables from run directories");
  std::vector<std::string> rp_dirs;
  std::string rp_out;
  report_cmd->add_option("dirs", rp_dirs, "run directories")->required();
  report_cmd->add_option("--out", rp_out, "write the table here as well");
  report_cmd->callback([&]() {
    const std::string table = cli::report_tables(rp_dirs);
    if (!rp_out.empty()) write_text_file(rp_out, table);
    std::cout << table;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
