#pragma once

#include <string>

namespace mealgen::vocab {

// Porter stemmer for lowercase ASCII English words. Tokens containing
// non-alphabetic characters are stemmed on their final '_'-separated word
// ("cherry_tomatoes" -> "cherry_tomato") so compound ingredient names merge
// the way their head noun does.
std::string porter_stem(const std::string& word);
std::string stem_token(const std::string& token);

}  // namespace mealgen::vocab
