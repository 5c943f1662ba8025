#include "synth/render.hpp"

#include <algorithm>
#include <cmath>

#include "core/check.hpp"
#include "core/rng.hpp"

namespace mealgen::synth {

namespace {

constexpr int kNumShapes = 8;

std::array<uint8_t, 3> hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = v - c;
  auto q = [&](double u) { return static_cast<uint8_t>(std::lround((u + m) * 255.0)); };
  return {q(r), q(g), q(b)};
}

const char* kHueNames[16] = {"red",  "orange", "amber", "lime",   "green",  "mint",
                             "teal", "cyan",   "azure", "blue",   "indigo", "violet",
                             "purple", "magenta", "rose", "crimson"};
const char* kShapeNames[kNumShapes] = {"disc", "square", "triangle", "diamond",
                                       "ring", "cross",  "bar",      "hex"};

struct Instance {
  int shape;
  std::array<uint8_t, 3> rgb;
  double cx, cy, size, rot;
};

bool inside_shape(const Instance& g, double px, double py) {
  const double dx = px - g.cx, dy = py - g.cy;
  const double ca = std::cos(g.rot), sa = std::sin(g.rot);
  const double x = dx * ca + dy * sa, y = -dx * sa + dy * ca;
  const double s = g.size;
  switch (g.shape) {
    case 0:  // disc
      return x * x + y * y <= s * s;
    case 1:  // square
      return std::max(std::abs(x), std::abs(y)) <= s * 0.85;
    case 2: {  // triangle (up-pointing in local coords)
      if (y < -s * 0.8 || y > s) return false;
      const double half = (s - y) * 0.55;
      return std::abs(x) <= half;
    }
    case 3:  // diamond
      return std::abs(x) + std::abs(y) <= s * 1.1;
    case 4: {  // ring
      const double r2 = x * x + y * y;
      return r2 <= s * s && r2 >= s * s * 0.3;
    }
    case 5:  // cross
      return (std::abs(x) <= s * 0.32 && std::abs(y) <= s) ||
             (std::abs(y) <= s * 0.32 && std::abs(x) <= s);
    case 6:  // bar
      return std::abs(x) <= s && std::abs(y) <= s * 0.34;
    case 7: {  // hexagon
      const double k = s * 0.92;
      const double p1 = std::abs(x);
      const double p2 = std::abs(0.5 * x + 0.8660254 * y);
      const double p3 = std::abs(0.5 * x - 0.8660254 * y);
      return std::max({p1, p2, p3}) <= k;
    }
  }
  return false;
}

struct Scene {
  std::array<double, 3> table;
  std::array<double, 3> plate;
  double plate_cx, plate_cy, plate_r;
  std::vector<Instance> instances;
};

Scene build_scene(const SynthRecipe& recipe, const Palette& palette) {
  Rng rng(recipe.layout_seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Scene sc;
  const double tj = (uni(rng) - 0.5) * 0.08;
  sc.table = {0.34 + tj, 0.28 + tj * 0.6, 0.24 + tj * 0.4};
  const double pj = (uni(rng) - 0.5) * 0.05;
  sc.plate = {0.93 + pj, 0.91 + pj, 0.87 + pj};
  sc.plate_cx = 0.5 + (uni(rng) - 0.5) * 0.05;
  sc.plate_cy = 0.5 + (uni(rng) - 0.5) * 0.05;
  sc.plate_r = 0.40 + (uni(rng) - 0.5) * 0.04;
  for (int gi : recipe.subset) {
    require(gi >= 0 && gi < static_cast<int>(palette.glyphs.size()),
            "render: unknown glyph id " + std::to_string(gi));
    const Glyph& glyph = palette.glyphs[static_cast<size_t>(gi)];
    const int count = 1 + static_cast<int>(uni(rng) * 2.0);  // 1..2 instances
    for (int k = 0; k < count; ++k) {
      const double ang = uni(rng) * 2.0 * M_PI;
      const double dist = uni(rng) * sc.plate_r * 0.62;
      const double size = 0.055 + uni(rng) * 0.04;
      const double rot = uni(rng) * 2.0 * M_PI;
      if (!glyph.visible) continue;  // consumes no extra randomness beyond this instance
      sc.instances.push_back({glyph.shape, glyph.rgb,
                              sc.plate_cx + std::cos(ang) * dist,
                              sc.plate_cy + std::sin(ang) * dist, size, rot});
    }
  }
  return sc;
}

std::array<double, 3> shade(const Scene& sc, double px, double py) {
  std::array<double, 3> c = sc.table;
  const double dx = px - sc.plate_cx, dy = py - sc.plate_cy;
  const double r = std::sqrt(dx * dx + dy * dy);
  if (r <= sc.plate_r) {
    c = sc.plate;
    if (r >= sc.plate_r * 0.92)
      for (auto& v : c) v *= 0.82;  // rim
  }
  // later instances occlude earlier ones
  for (const auto& inst : sc.instances)
    if (inside_shape(inst, px, py))
      c = {inst.rgb[0] / 255.0, inst.rgb[1] / 255.0, inst.rgb[2] / 255.0};
  return c;
}

}  // namespace

Palette Palette::make(int k_visible, int k_invisible) {
  require(k_visible >= 1 && k_visible <= 16, "palette: k_visible must be in [1,16]");
  Palette p;
  for (int i = 0; i < k_visible; ++i) {
    Glyph g;
    const int hue_slot = i * 16 / k_visible;  // spread over the full wheel
    g.name = std::string(kHueNames[hue_slot]) + "_" + kShapeNames[i % kNumShapes];
    g.rgb = hsv_to_rgb(hue_slot * 22.5, 0.88, 0.92);
    g.shape = i % kNumShapes;
    g.visible = true;
    p.glyphs.push_back(std::move(g));
  }
  for (int i = 0; i < k_invisible; ++i) {
    Glyph g;
    g.name = "invis_" + std::string(1, static_cast<char>('a' + i));
    g.visible = false;
    p.glyphs.push_back(std::move(g));
  }
  return p;
}

int Palette::index_of(const std::string& name) const {
  for (size_t i = 0; i < glyphs.size(); ++i)
    if (glyphs[i].name == name) return static_cast<int>(i);
  return -1;
}

int Palette::visible_count() const {
  int n = 0;
  for (const auto& g : glyphs)
    if (g.visible) ++n;
  return n;
}

ImageU8 render(const SynthRecipe& recipe, const Palette& palette, int size) {
  require(size >= 8, "render: size too small");
  const Scene sc = build_scene(recipe, palette);
  ImageU8 img;
  img.h = img.w = size;
  img.px.resize(static_cast<size_t>(size) * size * 3);
  const double inv = 1.0 / static_cast<double>(size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      std::array<double, 3> acc{0, 0, 0};
      // 2x2 supersampling: interiors stay exact, edges blend
      for (int sy = 0; sy < 2; ++sy)
        for (int sx = 0; sx < 2; ++sx) {
          const auto c = shade(sc, (x + 0.25 + 0.5 * sx) * inv, (y + 0.25 + 0.5 * sy) * inv);
          for (int ch = 0; ch < 3; ++ch) acc[static_cast<size_t>(ch)] += c[static_cast<size_t>(ch)];
        }
      for (int ch = 0; ch < 3; ++ch)
        img.at(y, x, ch) = static_cast<uint8_t>(
            std::clamp(std::lround(acc[static_cast<size_t>(ch)] * 0.25 * 255.0), 0L, 255L));
    }
  return img;
}

}  // namespace mealgen::synth
