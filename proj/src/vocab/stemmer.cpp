#include "vocab/stemmer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace mealgen::vocab {

namespace {

bool is_vowel_at(const std::string& w, size_t i) {
  const char c = w[i];
  if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
  // y is a vowel when preceded by a consonant
  if (c == 'y' && i > 0) return !is_vowel_at(w, i - 1);
  return false;
}

// Porter's measure: the number of VC transitions in the word.
int measure(const std::string& w) {
  int m = 0;
  bool prev_vowel = false;
  for (size_t i = 0; i < w.size(); ++i) {
    const bool v = is_vowel_at(w, i);
    if (prev_vowel && !v) ++m;
    prev_vowel = v;
  }
  return m;
}

bool contains_vowel(const std::string& w) {
  for (size_t i = 0; i < w.size(); ++i)
    if (is_vowel_at(w, i)) return true;
  return false;
}

bool double_consonant(const std::string& w) {
  const size_t n = w.size();
  if (n < 2 || w[n - 1] != w[n - 2]) return false;
  return !is_vowel_at(w, n - 1);
}

// consonant-vowel-consonant ending where the final consonant is not w, x or y
bool cvc_end(const std::string& w) {
  const size_t n = w.size();
  if (n < 3) return false;
  if (is_vowel_at(w, n - 3) || !is_vowel_at(w, n - 2) || is_vowel_at(w, n - 1)) return false;
  const char c = w[n - 1];
  return c != 'w' && c != 'x' && c != 'y';
}

bool ends_with(const std::string& w, const char* suf) {
  const size_t n = std::string(suf).size();
  return w.size() >= n && w.compare(w.size() - n, n, suf) == 0;
}

bool replace_if(std::string& w, const char* suf, const char* rep, int min_measure) {
  if (!ends_with(w, suf)) return false;
  std::string stem = w.substr(0, w.size() - std::string(suf).size());
  if (measure(stem) > min_measure) w = stem + rep;
  return true;  // suffix matched, whether or not the condition held
}

}  // namespace

std::string porter_stem(const std::string& word) {
  std::string w = word;
  if (w.size() <= 2) return w;

  // step 1a
  if (ends_with(w, "sses"))
    w.replace(w.size() - 4, 4, "ss");
  else if (ends_with(w, "ies"))
    w.replace(w.size() - 3, 3, "i");
  else if (!ends_with(w, "ss") && ends_with(w, "s"))
    w.pop_back();

  // step 1b
  bool step1b_extra = false;
  if (ends_with(w, "eed")) {
    std::string stem = w.substr(0, w.size() - 3);
    if (measure(stem) > 0) w = stem + "ee";
  } else if (ends_with(w, "ed")) {
    std::string stem = w.substr(0, w.size() - 2);
    if (contains_vowel(stem)) {
      w = stem;
      step1b_extra = true;
    }
  } else if (ends_with(w, "ing")) {
    std::string stem = w.substr(0, w.size() - 3);
    if (contains_vowel(stem)) {
      w = stem;
      step1b_extra = true;
    }
  }
  if (step1b_extra) {
    if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz"))
      w += "e";
    else if (double_consonant(w) && !ends_with(w, "l") && !ends_with(w, "s") && !ends_with(w, "z"))
      w.pop_back();
    else if (measure(w) == 1 && cvc_end(w))
      w += "e";
  }

  // step 1c
  if (ends_with(w, "y") && contains_vowel(w.substr(0, w.size() - 1))) w.back() = 'i';

  // step 2
  static const std::array<std::pair<const char*, const char*>, 20> step2{{
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
      {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},   {"entli", "ent"},
      {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
      {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"},
  }};
  for (const auto& [suf, rep] : step2)
    if (replace_if(w, suf, rep, 0)) break;

  // step 3
  static const std::array<std::pair<const char*, const char*>, 7> step3{{
      {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
      {"ical", "ic"},  {"ful", ""},   {"ness", ""},
  }};
  for (const auto& [suf, rep] : step3)
    if (replace_if(w, suf, rep, 0)) break;

  // step 4
  static const std::array<const char*, 19> step4{{
      "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent",
      "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
  }};
  for (const char* suf : step4) {
    if (!ends_with(w, suf)) continue;
    std::string stem = w.substr(0, w.size() - std::string(suf).size());
    if (std::string(suf) == "ion" && !(ends_with(stem, "s") || ends_with(stem, "t"))) break;
    if (measure(stem) > 1) w = stem;
    break;
  }

  // step 5a
  if (ends_with(w, "e")) {
    std::string stem = w.substr(0, w.size() - 1);
    const int m = measure(stem);
    if (m > 1 || (m == 1 && !cvc_end(stem))) w = stem;
  }
  // step 5b
  if (measure(w) > 1 && double_consonant(w) && ends_with(w, "l")) w.pop_back();

  return w;
}

std::string stem_token(const std::string& token) {
  const size_t us = token.rfind('_');
  const std::string head = us == std::string::npos ? "" : token.substr(0, us + 1);
  std::string word = us == std::string::npos ? token : token.substr(us + 1);
  const bool alpha = !word.empty() && std::all_of(word.begin(), word.end(), [](unsigned char c) {
    return std::isalpha(c) != 0;
  });
  if (!alpha) return token;
  return head + porter_stem(word);
}

}  // namespace mealgen::vocab
