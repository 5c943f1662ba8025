#pragma once

#include <map>
#include <string>
#include <vector>

#include "data/recipe.hpp"

namespace mealgen::vocab {

// Canonical ingredient vocabulary. Canonical tokens are unique, lowercase and
// ordered by descending corpus frequency (ties lexicographic). Encoding
// reserves index 0 as the pad/unknown id; canonical token i sits at encode
// index i+1.
struct IngredientVocabulary {
  std::vector<std::string> canonical;
  std::map<std::string, int> raw_to_canonical;  // raw token -> index into canonical
  double coverage = 0.0;                        // fraction of recipes fully covered

  int canonical_index(const std::string& raw) const;  // -1 when unknown
  int encode_index(const std::string& raw) const;     // 0 = pad/unknown
  long encode_vocab_size() const { return static_cast<long>(canonical.size()) + 1; }

  std::vector<int> encode(const std::vector<std::string>& raw_ingredients) const;

  uint64_t content_hash() const;

  void save(const std::string& path) const;
  static IngredientVocabulary load(const std::string& path);
};

struct MergeProposal {
  std::string token_a, token_b;  // token_a < token_b
  double similarity = 0.0;
  enum class Decision { pending, accept, reject } decision = Decision::pending;
};

struct MergeDecision {
  std::string token_a, token_b;
  bool accept = false;
};

// Normalizes a raw ingredient string: lowercase, trimmed, inner whitespace
// collapsed to '_'.
std::string normalize_token(const std::string& raw);

// The top_k most frequent normalized ingredient strings, ties broken
// lexicographically. Errors on an empty corpus.
std::vector<std::string> frequency_cut(const std::vector<data::Recipe>& recipes, long top_k);

// Maps every token to the most frequent surface form among those sharing its
// stem (ties lexicographic).
std::map<std::string, std::string> stem_merge(const std::vector<std::string>& tokens,
                                              const std::map<std::string, long>& freq);

// Vocabulary pipeline state between the stemming merge and the fusion review.
struct VocabBuilder {
  std::vector<std::string> tokens;             // candidate canonical tokens, freq-ordered
  std::map<std::string, std::string> raw_map;  // normalized raw -> candidate token
  std::map<std::string, long> freq;            // candidate token -> summed corpus count

  static VocabBuilder build(const std::vector<data::Recipe>& recipes, long top_k);

  // Union of accepted merges (representative = more frequent token), then the
  // final canonical ordering and coverage over `recipes`.
  IngredientVocabulary finalize(const std::vector<MergeDecision>& decisions,
                                const std::vector<MergeProposal>& proposals,
                                const std::vector<data::Recipe>& recipes) const;
};

// decisions file: token_a<TAB>token_b<TAB>accept|reject, one row per line.
std::vector<MergeDecision> load_decisions(const std::string& path);
void save_decisions(const std::string& path, const std::vector<MergeDecision>& decisions);

void save_proposals(const std::string& path, const std::vector<MergeProposal>& proposals);

}  // namespace mealgen::vocab
