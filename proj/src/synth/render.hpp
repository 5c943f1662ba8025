#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "core/image.hpp"

namespace mealgen::synth {

// Scene glyphs: one signature color/shape per ingredient. Invisible
// ingredients exist in recipes but draw nothing.
struct Glyph {
  std::string name;
  std::array<uint8_t, 3> rgb{};
  int shape = 0;
  bool visible = true;
};

struct Palette {
  std::vector<Glyph> glyphs;

  // k_visible glyphs with maximally separated hues and cycling shapes, then
  // k_invisible non-rendering ones.
  static Palette make(int k_visible, int k_invisible = 0);

  int index_of(const std::string& name) const;  // -1 when unknown
  int visible_count() const;
};

struct SynthRecipe {
  std::string id;
  std::vector<int> subset;  // palette indices, recipe order
  uint64_t layout_seed = 0;
};

// Pure function of (recipe, palette, size): plate scene with one or more
// glyph instances per visible subset ingredient. Layout lives in unit
// coordinates, so the same recipe renders the same scene at every scale.
ImageU8 render(const SynthRecipe& recipe, const Palette& palette, int size);

}  // namespace mealgen::synth
