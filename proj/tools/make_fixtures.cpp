// Writes the bundled test fixtures: two annotated plate images, one empty dish
// with its usable region and a few style images.
//
//   make_fixtures <dir>
#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <iostream>

#include "agarsynth/dataset.hpp"
#include "agarsynth/rng.hpp"

using namespace agarsynth;

namespace {

constexpr int kPlate = 640;
constexpr int kDish = 900;

struct Colony {
  double cx, cy, r;
  int species;
};

const Rgb kAgar{0.72, 0.58, 0.36};

// Body colors per species id 1..5.
const std::array<Rgb, 5> kBody = {Rgb{0.96, 0.88, 0.58}, Rgb{0.93, 0.90, 0.82},
                                  Rgb{0.62, 0.72, 0.52}, Rgb{0.90, 0.84, 0.70},
                                  Rgb{0.98, 0.97, 0.94}};

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a.r + t * (b.r - a.r), a.g + t * (b.g - a.g), a.b + t * (b.b - a.b)};
}

// Agar with slow shading, a dark rim and grey bench outside the dish.
ImageRGB empty_plate(int size, double radius, double phase) {
  ImageRGB img(size, size);
  const double c = size / 2.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const double dx = x + 0.5 - c, dy = y + 0.5 - c;
      const double d = std::hypot(dx, dy);
      const double shade = 1.0 + 0.04 * std::sin(x * 0.013 + phase) * std::cos(y * 0.011 - phase) -
                           0.06 * (d / radius) * (d / radius);
      Rgb p{kAgar.r * shade, kAgar.g * shade, kAgar.b * shade};
      if (d > radius) p = d > radius + 12 ? Rgb{0.35, 0.35, 0.37} : Rgb{0.45, 0.38, 0.27};
      img.at(x, y) = p;
    }
  return img;
}

void draw_colony(ImageRGB& img, const Colony& c) {
  const Rgb body = kBody[c.species - 1];
  for (int y = int(c.cy - c.r) - 1; y <= int(c.cy + c.r) + 1; ++y)
    for (int x = int(c.cx - c.r) - 1; x <= int(c.cx + c.r) + 1; ++x) {
      if (!img.contains(x, y)) continue;
      const double d = std::hypot(x + 0.5 - c.cx, y + 0.5 - c.cy);
      const double cover = std::clamp(c.r - d + 0.5, 0.0, 1.0);
      if (cover <= 0) continue;
      const double glow = 1.0 + 0.05 * (1.0 - d / c.r);
      const Rgb col{std::min(body.r * glow, 1.0), std::min(body.g * glow, 1.0),
                    std::min(body.b * glow, 1.0)};
      img.at(x, y) = mix(img.at(x, y), col, cover);
    }
}

// Thick dark stroke, like a marker label on the dish bottom.
void draw_marker(ImageRGB& img, double x0, double y0, double x1, double y1, double width) {
  const Rgb ink{0.04, 0.05, 0.16};
  const double len = std::hypot(x1 - x0, y1 - y0);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double px = x + 0.5 - x0, py = y + 0.5 - y0;
      const double t = std::clamp((px * (x1 - x0) + py * (y1 - y0)) / (len * len), 0.0, 1.0);
      const double d = std::hypot(px - t * (x1 - x0), py - t * (y1 - y0));
      if (d < width / 2) img.at(x, y) = ink;
    }
}

// Random layout: isolated colonies plus touching groups of 2 or 3.
std::vector<Colony> layout(Rng& rng, const std::vector<std::array<int, 3>>& plan, double radius) {
  std::vector<Colony> out;
  const double c = kPlate / 2.0;
  auto free_of = [&](double x, double y, double r, std::size_t group_start) {
    if (std::hypot(x - c, y - c) > radius - r - 14) return false;
    for (std::size_t i = 0; i < group_start; ++i)
      if (std::hypot(x - out[i].cx, y - out[i].cy) < r + out[i].r + 8) return false;
    return true;
  };
  for (const auto& [species, singles, groups] : plan) {
    for (int k = 0; k < singles + groups; ++k) {
      const int members = k < singles ? 1 : 2 + (k % 2);
      for (int tries = 0;; ++tries) {
        if (tries > 10000) throw std::runtime_error("fixture layout failed");
        const std::size_t start = out.size();
        std::vector<Colony> group;
        double r = 7 + 7 * uniform01(rng);
        double x = c + (uniform01(rng) * 2 - 1) * radius, y = c + (uniform01(rng) * 2 - 1) * radius;
        group.push_back({std::round(x), std::round(y), std::round(r), species});
        for (int m = 1; m < members; ++m) {
          const Colony& prev = group.back();
          const double r2 = std::round(7 + 6 * uniform01(rng));
          const double ang = uniform01(rng) * 2 * M_PI;
          const double dist = 0.75 * (prev.r + r2);
          group.push_back({std::round(prev.cx + dist * std::cos(ang)),
                           std::round(prev.cy + dist * std::sin(ang)), r2, species});
        }
        bool ok = true;
        for (const Colony& g : group) ok = ok && free_of(g.cx, g.cy, g.r, start);
        if (!ok) continue;
        out.insert(out.end(), group.begin(), group.end());
        break;
      }
    }
  }
  return out;
}

json coco_entries(const std::vector<Colony>& colonies, int image_id, int& next_id) {
  json anns = json::array();
  for (const Colony& c : colonies)
    anns.push_back({{"id", next_id++},
                    {"image_id", image_id},
                    {"category_id", c.species},
                    {"bbox", {c.cx - c.r, c.cy - c.r, 2 * c.r, 2 * c.r}},
                    {"area", 4 * c.r * c.r},
                    {"iscrowd", 0}});
  return anns;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <dir>\n";
    return 1;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir / "plates");
  fs::create_directories(dir / "dishes");
  fs::create_directories(dir / "styles");
  Rng rng(derive_seed(2023, {1}));
  const double radius = kPlate / 2.0 - 24;

  // species, isolated colonies, touching groups
  const std::vector<std::vector<std::array<int, 3>>> plans = {
      {{1, 8, 3}, {2, 6, 2}},
      {{3, 5, 2}, {4, 5, 2}, {5, 5, 2}},
  };
  json images = json::array(), annotations = json::array(), categories = json::array();
  for (int k = 0; k < kSpeciesCount; ++k) categories.push_back({{"id", k + 1}, {"name", kSpeciesNames[k]}});
  int next_id = 1;
  for (std::size_t p = 0; p < plans.size(); ++p) {
    ImageRGB img = empty_plate(kPlate, radius, 0.7 * p);
    const std::vector<Colony> colonies = layout(rng, plans[p], radius);
    if (p == 0) {
      // Marker stroke across the corner of the first colony's box.
      const Colony& c = colonies[0];
      draw_marker(img, c.cx + c.r - 3, c.cy - c.r - 20, c.cx + c.r + 25, c.cy - c.r + 4, 5);
    }
    for (const Colony& c : colonies) draw_colony(img, c);
    const std::string name = fmt::format("plate_{}.png", p + 1);
    write_png(dir / "plates" / name, img);
    images.push_back({{"id", int(p) + 1}, {"file_name", name}, {"width", kPlate}, {"height", kPlate}});
    for (json& a : coco_entries(colonies, int(p) + 1, next_id)) annotations.push_back(a);
  }
  write_json(dir / "plates" / "annotations.json",
             {{"images", images}, {"annotations", annotations}, {"categories", categories}}, 1);

  write_png(dir / "dishes" / "dish_1.png", empty_plate(kDish, 440, 1.9));
  write_json(dir / "dishes" / "dish_1.json",
             {{"region", {{"shape", "circle"}, {"cx", kDish / 2.0}, {"cy", kDish / 2.0}, {"r", 430.0}}}}, 1);

  const std::array<Rgb, 4> tints = {Rgb{0.80, 0.50, 0.30}, Rgb{0.55, 0.60, 0.45},
                                    Rgb{0.85, 0.80, 0.70}, Rgb{0.40, 0.30, 0.25}};
  for (std::size_t s = 0; s < tints.size(); ++s) {
    ImageRGB style(48, 48);
    for (int y = 0; y < 48; ++y)
      for (int x = 0; x < 48; ++x) {
        const double v = 0.85 + 0.15 * std::sin(0.3 * x + s) * std::cos(0.2 * y);
        style.at(x, y) = {tints[s].r * v, tints[s].g * v, tints[s].b * v};
      }
    write_png(dir / "styles" / fmt::format("style_{:02}.png", s), style);
  }
  std::cout << "wrote fixtures to " << dir << "\n";
  return 0;
}
