#include "vocab/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "core/check.hpp"
#include "core/rng.hpp"
#include "vocab/stemmer.hpp"

namespace mealgen::vocab {

using nlohmann::json;

std::string normalize_token(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool in_space = false;
  for (unsigned char c : raw) {
    if (std::isspace(c)) {
      in_space = !out.empty();
      continue;
    }
    if (in_space) {
      out += '_';
      in_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

std::vector<std::string> frequency_cut(const std::vector<data::Recipe>& recipes, long top_k) {
  require(top_k >= 1, "frequency_cut: top_k must be >= 1");
  std::map<std::string, long> counts;
  for (const auto& r : recipes)
    for (const auto& raw : r.ingredients) {
      const std::string t = normalize_token(raw);
      if (!t.empty()) ++counts[t];
    }
  require(!counts.empty(), "frequency_cut: empty corpus");
  std::vector<std::pair<std::string, long>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (const auto& [tok, cnt] : items) {
    if (static_cast<long>(out.size()) == top_k) break;
    out.push_back(tok);
  }
  return out;
}

std::map<std::string, std::string> stem_merge(const std::vector<std::string>& tokens,
                                              const std::map<std::string, long>& freq) {
  require(!tokens.empty(), "stem_merge: empty token list");
  std::map<std::string, std::vector<std::string>> by_stem;
  for (const auto& t : tokens) by_stem[stem_token(t)].push_back(t);
  std::map<std::string, std::string> out;
  for (auto& [stem, group] : by_stem) {
    std::string rep = group.front();
    long best = freq.count(rep) ? freq.at(rep) : 0;
    for (const auto& t : group) {
      const long f = freq.count(t) ? freq.at(t) : 0;
      if (f > best || (f == best && t < rep)) {
        rep = t;
        best = f;
      }
    }
    for (const auto& t : group) out[t] = rep;
  }
  return out;
}

VocabBuilder VocabBuilder::build(const std::vector<data::Recipe>& recipes, long top_k) {
  VocabBuilder b;
  std::map<std::string, long> counts;
  for (const auto& r : recipes)
    for (const auto& raw : r.ingredients) {
      const std::string t = normalize_token(raw);
      if (!t.empty()) ++counts[t];
    }
  const std::vector<std::string> kept = frequency_cut(recipes, top_k);
  auto merged = stem_merge(kept, counts);
  for (const auto& [raw, rep] : merged) {
    b.raw_map[raw] = rep;
    b.freq[rep] += counts[raw];
  }
  std::vector<std::pair<std::string, long>> reps(b.freq.begin(), b.freq.end());
  std::sort(reps.begin(), reps.end(), [](const auto& a, const auto& b2) {
    if (a.second != b2.second) return a.second > b2.second;
    return a.first < b2.first;
  });
  for (const auto& [tok, cnt] : reps) b.tokens.push_back(tok);
  return b;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[static_cast<size_t>(a)] != a) {
      parent[static_cast<size_t>(a)] = parent[static_cast<size_t>(parent[static_cast<size_t>(a)])];
      a = parent[static_cast<size_t>(a)];
    }
    return a;
  }
  void unite(int a, int b) { parent[static_cast<size_t>(find(a))] = find(b); }
};

}  // namespace

IngredientVocabulary VocabBuilder::finalize(const std::vector<MergeDecision>& decisions,
                                            const std::vector<MergeProposal>& proposals,
                                            const std::vector<data::Recipe>& recipes) const {
  std::map<std::string, int> token_idx;
  for (size_t i = 0; i < tokens.size(); ++i) token_idx[tokens[i]] = static_cast<int>(i);

  std::map<std::pair<std::string, std::string>, bool> known_pairs;
  for (const auto& p : proposals) known_pairs[{p.token_a, p.token_b}] = true;

  UnionFind uf(tokens.size());
  for (const auto& d : decisions) {
    auto key = std::minmax(d.token_a, d.token_b);
    require(known_pairs.count({key.first, key.second}) > 0,
            "apply_decisions: decision for unknown pair (" + d.token_a + ", " + d.token_b + ")");
    if (!d.accept) continue;
    uf.unite(token_idx.at(d.token_a), token_idx.at(d.token_b));
  }

  // representative of each class = most frequent member (ties lexicographic)
  std::map<int, std::string> rep_of_root;
  std::map<int, long> class_freq;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const int root = uf.find(static_cast<int>(i));
    const std::string& t = tokens[i];
    const long f = freq.at(t);
    class_freq[root] += f;
    auto it = rep_of_root.find(root);
    if (it == rep_of_root.end() || f > freq.at(it->second) ||
        (f == freq.at(it->second) && t < it->second))
      rep_of_root[root] = t;
  }

  std::vector<std::pair<std::string, long>> canon;
  for (const auto& [root, rep] : rep_of_root) canon.emplace_back(rep, class_freq[root]);
  std::sort(canon.begin(), canon.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  IngredientVocabulary v;
  std::map<std::string, int> canon_idx;
  for (const auto& [tok, f] : canon) {
    canon_idx[tok] = static_cast<int>(v.canonical.size());
    v.canonical.push_back(tok);
  }
  for (const auto& [raw, candidate] : raw_map) {
    const int root = uf.find(token_idx.at(candidate));
    v.raw_to_canonical[raw] = canon_idx.at(rep_of_root.at(root));
  }

  long covered = 0;
  for (const auto& r : recipes) {
    bool all_mapped = true;
    for (const auto& raw : r.ingredients)
      if (v.raw_to_canonical.count(normalize_token(raw)) == 0) {
        all_mapped = false;
        break;
      }
    if (all_mapped) ++covered;
  }
  v.coverage = recipes.empty() ? 0.0 : static_cast<double>(covered) / static_cast<double>(recipes.size());
  return v;
}

int IngredientVocabulary::canonical_index(const std::string& raw) const {
  auto it = raw_to_canonical.find(normalize_token(raw));
  return it == raw_to_canonical.end() ? -1 : it->second;
}

int IngredientVocabulary::encode_index(const std::string& raw) const {
  const int idx = canonical_index(raw);
  return idx < 0 ? 0 : idx + 1;
}

std::vector<int> IngredientVocabulary::encode(const std::vector<std::string>& raw_ingredients) const {
  std::vector<int> out;
  out.reserve(raw_ingredients.size());
  for (const auto& r : raw_ingredients) out.push_back(encode_index(r));
  return out;
}

uint64_t IngredientVocabulary::content_hash() const {
  std::string joined;
  for (const auto& t : canonical) {
    joined += t;
    joined += '\n';
  }
  return fnv1a64(joined);
}

void IngredientVocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "vocabulary: cannot open " + path + " for writing");
  json header;
  header["schema"] = "mealgen-vocab-v1";
  header["coverage"] = coverage;
  out << header.dump() << "\n";
  std::vector<std::vector<std::string>> aliases(canonical.size());
  for (const auto& [raw, idx] : raw_to_canonical) aliases[static_cast<size_t>(idx)].push_back(raw);
  for (size_t i = 0; i < canonical.size(); ++i) {
    out << canonical[i];
    std::sort(aliases[i].begin(), aliases[i].end());
    for (const auto& a : aliases[i]) out << "\t" << a;
    out << "\n";
  }
  require(out.good(), "vocabulary: short write to " + path);
}

IngredientVocabulary IngredientVocabulary::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "vocabulary: cannot open " + path);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "vocabulary: empty file " + path);
  json header = json::parse(line);
  require(header.value("schema", "") == "mealgen-vocab-v1", "vocabulary: unknown schema");
  IngredientVocabulary v;
  v.coverage = header["coverage"].get<double>();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    bool first = true;
    const int idx = static_cast<int>(v.canonical.size());
    while (std::getline(ss, field, '\t')) {
      if (first) {
        v.canonical.push_back(field);
        first = false;
      } else {
        v.raw_to_canonical[field] = idx;
      }
    }
  }
  return v;
}

std::vector<MergeDecision> load_decisions(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "decisions: cannot open " + path);
  std::vector<MergeDecision> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string a, b, verdict;
    require(static_cast<bool>(std::getline(ss, a, '\t')) &&
                static_cast<bool>(std::getline(ss, b, '\t')) &&
                static_cast<bool>(std::getline(ss, verdict, '\t')),
            "decisions: malformed row at line " + std::to_string(lineno));
    require(verdict == "accept" || verdict == "reject",
            "decisions: verdict must be accept|reject at line " + std::to_string(lineno));
    out.push_back({normalize_token(a), normalize_token(b), verdict == "accept"});
  }
  return out;
}

void save_decisions(const std::string& path, const std::vector<MergeDecision>& decisions) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "decisions: cannot open " + path + " for writing");
  for (const auto& d : decisions)
    out << d.token_a << "\t" << d.token_b << "\t" << (d.accept ? "accept" : "reject") << "\n";
}

void save_proposals(const std::string& path, const std::vector<MergeProposal>& proposals) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "proposals: cannot open " + path + " for writing");
  for (const auto& p : proposals) {
    json j;
    j["token_a"] = p.token_a;
    j["token_b"] = p.token_b;
    j["similarity"] = p.similarity;
    j["decision"] = p.decision == MergeProposal::Decision::pending  ? "pending"
                    : p.decision == MergeProposal::Decision::accept ? "accept"
                                                                    : "reject";
    out << j.dump() << "\n";
  }
}

}  // namespace mealgen::vocab
