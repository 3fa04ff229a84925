#include "anomforge/fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "anomforge/error.hpp"
#include "anomforge/text.hpp"

namespace anomforge {

namespace {

std::vector<std::string> context_objects_for(std::string_view scene) {
  static const std::map<std::string, std::vector<std::string>, std::less<>> table = {
      {"bathroom", {"sink", "bathtub", "mirror", "shower curtain", "bath mat", "soap dish"}},
      {"bedroom", {"bed", "pillow", "nightstand", "wardrobe", "lamp", "blanket"}},
      {"classroom", {"desk", "chalkboard", "chair", "bookshelf", "globe", "notebook"}},
      {"cubicle", {"monitor", "keyboard", "office chair", "filing cabinet", "desk lamp", "phone"}},
      {"dining room", {"dining table", "chair", "plate", "vase", "candle", "wine glass"}},
      {"hotel room", {"bed", "luggage", "lamp", "curtain", "armchair", "television"}},
      {"kitchen", {"stove", "refrigerator", "kettle", "sink", "cabinet", "toaster"}},
      {"living room", {"sofa", "coffee table", "television", "rug", "bookshelf", "armchair"}},
  };
  if (auto it = table.find(scene); it != table.end()) return it->second;
  std::vector<std::string> generic;
  for (int i = 0; i < 6; ++i) generic.push_back(fmt::format("{} object {}", scene, i));
  return generic;
}

std::string slug(std::string_view text) {
  std::string out;
  for (char c : text) out += (c == ' ' || c == '/' || c == '\'') ? '_' : c;
  return out;
}

}  // namespace

FixtureSet build_fixture_set(const Ontology& ontology, const MockSemanticSpace& space, const FixtureOptions& options) {
  constexpr int kCols = 3;
  constexpr int kRows = 2;
  constexpr int kObjectsPerImage = 5;
  if (options.images_per_scene < 1) throw validation_error("fixtures: images_per_scene must be >= 1");
  if (options.masks_per_image < 1 || options.masks_per_image > kObjectsPerImage)
    throw validation_error(fmt::format("fixtures: masks_per_image must be in [1, {}]", kObjectsPerImage));
  const int cell_w = options.width / kCols;
  const int cell_h = options.height / kRows;
  if (std::min(cell_w, cell_h) < 24) throw validation_error("fixtures: image too small");

  FixtureSet set;
  std::mt19937_64 rng(mix_seed(options.seed, 0x66697874ULL));
  for (const auto& scene : ontology.scenes()) {
    const auto context = context_objects_for(scene.name);
    const auto scene_color = space.color_for(scene.name);
    for (int n = 0; n < options.images_per_scene; ++n) {
      const auto image_id = fmt::format("{}_{:02d}", slug(scene.name), n);
      RasterImage image(options.width, options.height, scene_color);

      std::vector<int> cells(kCols * kRows);
      std::iota(cells.begin(), cells.end(), 0);
      std::shuffle(cells.begin(), cells.end(), rng);
      std::vector<std::string> names = context;
      std::shuffle(names.begin(), names.end(), rng);

      std::vector<Region> regions;
      std::vector<SizeClass> sizes;
      for (int i = 0; i < kObjectsPerImage; ++i) {
        const auto size = static_cast<SizeClass>(rng() % 3);
        const double fraction = size == SizeClass::Small ? 0.3 : size == SizeClass::Medium ? 0.55 : 0.85;
        const int w = std::max(4, static_cast<int>(cell_w * fraction));
        const int h = std::max(4, static_cast<int>(cell_h * fraction));
        const int cx = (cells[static_cast<std::size_t>(i)] % kCols) * cell_w;
        const int cy = (cells[static_cast<std::size_t>(i)] / kCols) * cell_h;
        const int x = cx + static_cast<int>(rng() % static_cast<std::uint64_t>(cell_w - w + 1));
        const int y = cy + static_cast<int>(rng() % static_cast<std::uint64_t>(cell_h - h + 1));
        const auto object_color = space.color_for(names[static_cast<std::size_t>(i) % names.size()]);
        for (int yy = y; yy < y + h; ++yy)
          for (int xx = x; xx < x + w; ++xx)
            image.set(xx, yy, ((xx / 2 + yy / 2) % 2 == 0) ? scene_color : object_color);
        regions.push_back({{x, y, w, h}, 0.95 - 0.05 * i});
        sizes.push_back(size);
      }
      for (int m = 0; m < options.masks_per_image; ++m)
        set.masks.push_back({image_id, regions[static_cast<std::size_t>(m)].bbox, sizes[static_cast<std::size_t>(m)]});

      set.images.images.push_back({image_id, scene.name, image_id + ".png"});
      set.regions.emplace(image_id, std::move(regions));
      set.pixels.emplace(image_id, std::move(image));
    }
  }
  return set;
}

FixtureSet write_fixture_set(const Ontology& ontology, const MockSemanticSpace& space,
                             const std::filesystem::path& dir, const FixtureOptions& options) {
  auto set = build_fixture_set(ontology, space, options);
  std::filesystem::create_directories(dir);
  set.images.root = dir;
  for (const auto& [id, image] : set.pixels) write_png(image, dir / (id + ".png"));
  save_image_set(set.images);
  save_masks(set.masks, dir / "masks.json");
  std::ofstream out(dir / "regions.json");
  out << to_json(set.regions).dump(2) << '\n';
  if (!out) throw io_error(fmt::format("cannot write '{}'", (dir / "regions.json").string()));
  return set;
}

}  // namespace anomforge
