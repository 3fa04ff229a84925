#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include "anomforge/candidate.hpp"
#include "anomforge/ontology.hpp"
#include "anomforge/providers.hpp"

namespace anomforge {

inline constexpr int kDefaultCandidates = 10;
inline constexpr int kDefaultPerPair = 4;
inline constexpr std::string_view kDefaultInpaintTemplate = "a photo of a {label}";

// The window is the mask scaled by `expand` about its centre, grown to at
// least min_size x min_size, capped at the image size and shifted (not
// shrunk) to stay inside the image.
struct CropPolicy {
  double expand = 2.0;
  int min_size = 256;
};

struct CroppedWindow {
  RasterImage image;
  Point offset;  // window coordinates + offset = full-image coordinates
  Rect window;
};

Rect crop_window_rect(const Rect& image_bounds, const Rect& mask, const CropPolicy& policy);
CroppedWindow crop_window(const RasterImage& image, const Rect& mask, const CropPolicy& policy = {});

struct BaseImage {
  std::string image_id;
  std::string scene;
  std::string file;  // relative to the image set directory
  bool operator==(const BaseImage&) const = default;
};

// <dir>/images.json: {"images": [{"image_id", "scene", "file"}, ...]}
struct ImageSet {
  std::filesystem::path root;
  std::vector<BaseImage> images;

  const BaseImage& find(std::string_view image_id) const;
  RasterImage load(std::string_view image_id) const;
};

ImageSet load_image_set(const std::filesystem::path& dir);
void save_image_set(const ImageSet& set);

// masks.json: [{"image_id", "x", "y", "w", "h", "size_class"}, ...]
std::vector<MaskSpec> load_masks(const std::filesystem::path& path);
void save_masks(const std::vector<MaskSpec>& masks, const std::filesystem::path& path);

// Per (image, mask) pair, draws up to per_pair targets without replacement
// from the scene's anomalies of the mask's size. Task ids follow plan order.
std::vector<GenerationTask> plan_tasks(const Ontology& ontology, const std::vector<BaseImage>& images,
                                       const std::vector<MaskSpec>& masks, int per_pair,
                                       std::uint64_t seed);

std::string inpaint_prompt(std::string_view prompt_template, std::string_view label);

struct GenerationOptions {
  int candidates = kDefaultCandidates;
  CropPolicy crop;
  std::string prompt_template = std::string(kDefaultInpaintTemplate);
};

// All-or-nothing: a provider failure throws an error naming the task, and
// no records are returned.
std::vector<CandidateRecord> generate_candidates(const GenerationTask& task, const RasterImage& image,
                                                 const InpaintingProvider& inpainter,
                                                 const GenerationOptions& options = {});

// Copy of base with exactly the mask rectangle replaced by the region image.
RasterImage inject(const RasterImage& base, const CandidateRecord& record);

// Appends one JSON line per record with a single write(2) on an O_APPEND
// descriptor. Accepted records are checked against the ontology first.
class ManifestWriter {
 public:
  ManifestWriter(const std::filesystem::path& path, const Ontology& ontology);
  ~ManifestWriter();
  ManifestWriter(const ManifestWriter&) = delete;
  ManifestWriter& operator=(const ManifestWriter&) = delete;

  void append(const CandidateRecord& record);

 private:
  std::filesystem::path path_;
  const Ontology& ontology_;
  int fd_ = -1;
  std::mutex mutex_;
};

void append_manifest(const std::filesystem::path& manifest, const CandidateRecord& record,
                     const std::string& final_image, const Ontology& ontology);

std::vector<CandidateRecord> read_manifest(const std::filesystem::path& path);
// Atomic replacement through a temporary file and rename.
void rewrite_manifest(const std::filesystem::path& path, const std::vector<CandidateRecord>& records,
                      const Ontology& ontology);

}  // namespace anomforge
