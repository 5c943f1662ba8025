#include "vocab/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "core/check.hpp"
#include "core/rng.hpp"

namespace mealgen::vocab {

namespace {
constexpr char kMagic[8] = {'M', 'G', 'I', 'N', 'G', 'E', 'B', '1'};
}

void EmbeddingTable::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "embedding table: cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const uint32_t r = static_cast<uint32_t>(rows()), d = static_cast<uint32_t>(dim);
  out.write(reinterpret_cast<const char*>(&r), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  std::vector<float> buf(static_cast<size_t>(vectors.size()));
  for (long i = 0; i < vectors.size(); ++i) buf[static_cast<size_t>(i)] = static_cast<float>(vectors[i]);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  require(out.good(), "embedding table: short write to " + path);
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "embedding table: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  require(in.gcount() == 8 && std::memcmp(magic, kMagic, 8) == 0,
          "embedding table: bad magic in " + path);
  uint32_t r = 0, d = 0;
  in.read(reinterpret_cast<char*>(&r), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  require(in.good() && r >= 1 && d >= 1, "embedding table: bad header in " + path);
  EmbeddingTable t;
  t.dim = d;
  t.vectors = Tensor({static_cast<long>(r), static_cast<long>(d)});
  std::vector<float> buf(static_cast<size_t>(r) * d);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  require(in.gcount() == static_cast<std::streamsize>(buf.size() * 4),
          "embedding table: truncated data in " + path);
  for (size_t i = 0; i < buf.size(); ++i) t.vectors[static_cast<long>(i)] = buf[i];
  return t;
}

EmbeddingTable train_embeddings(const std::vector<std::vector<int>>& recipes, long n_tokens,
                                const EmbeddingTrainConfig& cfg) {
  require(n_tokens >= 1, "train_embeddings: empty vocabulary");
  const long V = n_tokens + 1;  // includes pad row
  Rng rng(cfg.seed);

  EmbeddingTable table;
  table.dim = cfg.dim;
  table.vectors = Tensor::uniform({V, cfg.dim}, rng, -0.5 / static_cast<double>(cfg.dim),
                                  0.5 / static_cast<double>(cfg.dim));
  Tensor ctx({V, cfg.dim});  // output-side table

  // unigram^{3/4} negative-sampling distribution over non-pad tokens
  std::vector<double> counts(static_cast<size_t>(V), 0.0);
  long total_pairs = 0;
  for (const auto& rlist : recipes) {
    long valid = 0;
    for (int id : rlist)
      if (id > 0 && id < V) {
        counts[static_cast<size_t>(id)] += 1.0;
        ++valid;
      }
    total_pairs += valid * (valid - 1);
  }
  require(total_pairs > 0, "train_embeddings: corpus has no co-occurring tokens");
  std::vector<double> weights(static_cast<size_t>(V), 0.0);
  for (long i = 1; i < V; ++i) weights[static_cast<size_t>(i)] = std::pow(counts[static_cast<size_t>(i)], 0.75);
  std::discrete_distribution<int> neg_dist(weights.begin(), weights.end());

  const long steps_total = static_cast<long>(cfg.epochs) * total_pairs;
  long step = 0;
  std::vector<double> grad_in(static_cast<size_t>(cfg.dim));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& rlist : recipes) {
      std::vector<int> ids;
      for (int id : rlist)
        if (id > 0 && id < V) ids.push_back(id);
      for (size_t a = 0; a < ids.size(); ++a) {
        for (size_t b = 0; b < ids.size(); ++b) {
          if (a == b) continue;
          const double lr =
              cfg.lr * std::max(1e-4, 1.0 - static_cast<double>(step) / static_cast<double>(steps_total));
          ++step;
          double* vin = table.vectors.data() + static_cast<long>(ids[a]) * cfg.dim;
          std::fill(grad_in.begin(), grad_in.end(), 0.0);
          for (int k = 0; k <= cfg.negatives; ++k) {
            int target;
            double label;
            if (k == 0) {
              target = ids[b];
              label = 1.0;
            } else {
              target = neg_dist(rng);
              if (target == ids[b]) continue;
              label = 0.0;
            }
            double* vout = ctx.data() + static_cast<long>(target) * cfg.dim;
            double z = 0.0;
            for (long e = 0; e < cfg.dim; ++e) z += vin[e] * vout[e];
            const double p = 1.0 / (1.0 + std::exp(-z));
            const double g = (p - label) * lr;
            for (long e = 0; e < cfg.dim; ++e) {
              grad_in[static_cast<size_t>(e)] += g * vout[e];
              vout[e] -= g * vin[e];
            }
          }
          for (long e = 0; e < cfg.dim; ++e) vin[e] -= grad_in[static_cast<size_t>(e)];
        }
      }
    }
  }
  // pad row stays zero
  for (long e = 0; e < cfg.dim; ++e) table.vectors[e] = 0.0;
  return table;
}

std::vector<MergeProposal> propose_fusions(const EmbeddingTable& table,
                                           const std::vector<std::string>& tokens,
                                           double threshold) {
  require(threshold > 0.0 && threshold <= 1.0, "propose_fusions: threshold must be in (0,1]");
  require(static_cast<long>(tokens.size()) == table.n_tokens(),
          "propose_fusions: token list does not match table");
  const long n = table.n_tokens(), d = table.dim;
  std::vector<double> norms(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double* v = table.row(i + 1);
    double s = 0.0;
    for (long e = 0; e < d; ++e) s += v[e] * v[e];
    norms[static_cast<size_t>(i)] = std::sqrt(s);
  }
  std::vector<MergeProposal> out;
  for (long i = 0; i < n; ++i) {
    if (norms[static_cast<size_t>(i)] == 0.0) continue;
    const double* vi = table.row(i + 1);
    for (long j = i + 1; j < n; ++j) {
      if (norms[static_cast<size_t>(j)] == 0.0) continue;
      const double* vj = table.row(j + 1);
      double s = 0.0;
      for (long e = 0; e < d; ++e) s += vi[e] * vj[e];
      s /= norms[static_cast<size_t>(i)] * norms[static_cast<size_t>(j)];
      if (s >= threshold) {
        auto [a, b] = std::minmax(tokens[static_cast<size_t>(i)], tokens[static_cast<size_t>(j)]);
        out.push_back({a, b, s, MergeProposal::Decision::pending});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const MergeProposal& a, const MergeProposal& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.token_a != b.token_a) return a.token_a < b.token_a;
    return a.token_b < b.token_b;
  });
  return out;
}

}  // namespace mealgen::vocab
