#pragma once

#include <cstdint>
#include <filesystem>

#include "anomforge/genpipe.hpp"
#include "anomforge/mock_providers.hpp"
#include "anomforge/ontology.hpp"

namespace anomforge {

struct FixtureOptions {
  int images_per_scene = 2;
  int width = 320;
  int height = 240;
  int masks_per_image = 3;
  std::uint64_t seed = 7;
};

struct FixtureSet {
  ImageSet images;
  std::vector<MaskSpec> masks;
  RegionAnnotations regions;
  std::map<std::string, RasterImage, std::less<>> pixels;
};

// Synthetic base images painted in the mock's colour space: the background is
// the scene's key colour and each context object is a checkerboard of the
// scene colour and the object's own colour, so every normal region shares the
// scene component. Masks are placed exactly over context objects, and the
// region annotations list every context object box.
FixtureSet build_fixture_set(const Ontology& ontology, const MockSemanticSpace& space,
                             const FixtureOptions& options = {});

// Writes <dir>/images.json, <dir>/masks.json, <dir>/regions.json and the PNGs.
FixtureSet write_fixture_set(const Ontology& ontology, const MockSemanticSpace& space,
                             const std::filesystem::path& dir, const FixtureOptions& options = {});

}  // namespace anomforge
