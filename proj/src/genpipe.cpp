#include "anomforge/genpipe.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "anomforge/error.hpp"
#include "anomforge/text.hpp"

namespace anomforge {

using nlohmann::json;

Rect crop_window_rect(const Rect& image_bounds, const Rect& mask, const CropPolicy& policy) {
  if (!(policy.expand >= 1.0)) throw validation_error("crop policy: expand must be >= 1");
  if (policy.min_size < 0) throw validation_error("crop policy: min_size must be >= 0");
  if (mask.empty() || !image_bounds.contains(mask))
    throw validation_error(fmt::format("crop: mask ({},{},{},{}) outside image", mask.x, mask.y, mask.width,
                                       mask.height));

  const auto axis = [&](int start, int length, int limit) {
    auto size = static_cast<int>(std::llround(length * policy.expand));
    size = std::clamp(std::max(size, policy.min_size), length, limit);
    int origin = start - (size - length) / 2;
    origin = std::clamp(origin, 0, limit - size);
    return std::pair{origin, size};
  };
  const auto [x, w] = axis(mask.x, mask.width, image_bounds.width);
  const auto [y, h] = axis(mask.y, mask.height, image_bounds.height);
  return {x, y, w, h};
}

CroppedWindow crop_window(const RasterImage& image, const Rect& mask, const CropPolicy& policy) {
  const auto window = crop_window_rect(image.bounds(), mask, policy);
  return {image.crop(window), {window.x, window.y}, window};
}

const BaseImage& ImageSet::find(std::string_view image_id) const {
  auto it = std::find_if(images.begin(), images.end(), [&](const BaseImage& b) { return b.image_id == image_id; });
  if (it == images.end()) throw validation_error(fmt::format("unknown image '{}'", image_id));
  return *it;
}

RasterImage ImageSet::load(std::string_view image_id) const { return read_png(root / find(image_id).file); }

ImageSet load_image_set(const std::filesystem::path& dir) {
  const auto index = dir / "images.json";
  std::ifstream in(index);
  if (!in) throw io_error(fmt::format("cannot open image index '{}'", index.string()));
  try {
    const auto doc = json::parse(in);
    ImageSet set{dir, {}};
    for (const auto& entry : doc.at("images")) {
      set.images.push_back({entry.at("image_id").get<std::string>(), entry.at("scene").get<std::string>(),
                            entry.at("file").get<std::string>()});
    }
    return set;
  } catch (const json::exception& e) {
    throw parse_error(fmt::format("image index '{}': {}", index.string(), e.what()));
  }
}

void save_image_set(const ImageSet& set) {
  json images = json::array();
  for (const auto& b : set.images) images.push_back({{"image_id", b.image_id}, {"scene", b.scene}, {"file", b.file}});
  std::ofstream out(set.root / "images.json");
  out << json{{"images", images}}.dump(2) << '\n';
  if (!out) throw io_error(fmt::format("cannot write image index in '{}'", set.root.string()));
}

std::vector<MaskSpec> load_masks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error(fmt::format("cannot open masks file '{}'", path.string()));
  try {
    std::vector<MaskSpec> masks;
    for (const auto& entry : json::parse(in)) masks.push_back(mask_from_json(entry));
    return masks;
  } catch (const json::exception& e) {
    throw parse_error(fmt::format("masks file '{}': {}", path.string(), e.what()));
  }
}

void save_masks(const std::vector<MaskSpec>& masks, const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& m : masks) arr.push_back(to_json(m));
  std::ofstream out(path);
  out << arr.dump(2) << '\n';
  if (!out) throw io_error(fmt::format("cannot write masks file '{}'", path.string()));
}

std::vector<GenerationTask> plan_tasks(const Ontology& ontology, const std::vector<BaseImage>& images,
                                       const std::vector<MaskSpec>& masks, int per_pair,
                                       std::uint64_t seed) {
  if (per_pair < 0) throw validation_error("plan: per_pair must be >= 0");
  std::vector<GenerationTask> tasks;
  for (std::size_t pair = 0; pair < masks.size(); ++pair) {
    const auto& mask = masks[pair];
    auto image = std::find_if(images.begin(), images.end(),
                              [&](const BaseImage& b) { return b.image_id == mask.image_id; });
    if (image == images.end())
      throw validation_error(fmt::format("plan: mask {} references unknown image '{}'", pair, mask.image_id));
    if (!ontology.find_scene(image->scene))
      throw validation_error(fmt::format("plan: image '{}' has unknown scene '{}'", image->image_id, image->scene));
    if (per_pair == 0) continue;

    auto pool = anomalous_objects_for(ontology, image->scene, mask.size_class);
    if (pool.empty()) {
      spdlog::warn("no {} anomalies for scene '{}'; skipping mask {} of image '{}'", to_string(mask.size_class),
                   image->scene, pair, image->image_id);
      continue;
    }
    std::mt19937_64 rng(mix_seed(seed, pair));
    std::shuffle(pool.begin(), pool.end(), rng);
    const auto take = std::min(pool.size(), static_cast<std::size_t>(per_pair));
    for (std::size_t i = 0; i < take; ++i) {
      const auto index = tasks.size();
      tasks.push_back({fmt::format("t{:05d}", index), image->image_id, image->scene, mask, pool[i].label,
                       mix_seed(seed ^ 0x7461736bULL, index)});
    }
  }
  return tasks;
}

std::string inpaint_prompt(std::string_view prompt_template, std::string_view label) {
  constexpr std::string_view placeholder = "{label}";
  std::string out;
  std::size_t pos = 0;
  bool found = false;
  while (true) {
    const auto next = prompt_template.find(placeholder, pos);
    if (next == std::string_view::npos) break;
    out.append(prompt_template.substr(pos, next - pos));
    out.append(label);
    pos = next + placeholder.size();
    found = true;
  }
  out.append(prompt_template.substr(pos));
  if (!found) throw validation_error(fmt::format("inpaint prompt template '{}' lacks {{label}}", prompt_template));
  return out;
}

std::vector<CandidateRecord> generate_candidates(const GenerationTask& task, const RasterImage& image,
                                                 const InpaintingProvider& inpainter,
                                                 const GenerationOptions& options) {
  if (options.candidates < 1) throw validation_error("generate: candidate count must be >= 1");
  try {
    const auto window = crop_window(image, task.mask.bbox, options.crop);
    const auto local_mask = task.mask.bbox.translated(-window.offset.x, -window.offset.y);
    const auto results = inpainter.inpaint(window.image, local_mask, inpaint_prompt(options.prompt_template, task.target),
                                           options.candidates, task.seed);
    std::vector<CandidateRecord> out;
    out.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
      CandidateRecord r;
      r.task = task;
      r.candidate_index = static_cast<int>(i);
      r.crop_window = window.window;
      r.region_image = results[i].crop(local_mask);
      out.push_back(std::move(r));
    }
    return out;
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("task {} ({} on '{}'): {}", task.task_id, task.target, task.image_id, e.what()));
  }
}

RasterImage inject(const RasterImage& base, const CandidateRecord& record) {
  if (!record.decision.is_accepted())
    throw validation_error(fmt::format("inject: {} is not accepted", record.sample_id()));
  const auto& mask = record.task.mask.bbox;
  if (!base.bounds().contains(mask))
    throw validation_error(fmt::format("inject: mask of {} outside base image", record.sample_id()));
  if (record.region_image.width() != mask.width || record.region_image.height() != mask.height)
    throw validation_error(fmt::format("inject: region of {} is {}x{}, mask is {}x{}", record.sample_id(),
                                       record.region_image.width(), record.region_image.height(), mask.width,
                                       mask.height));
  RasterImage out = base;
  out.paste(record.region_image, {mask.x, mask.y});
  return out;
}

namespace {

void check_writable(const CandidateRecord& record, const Ontology& ontology) {
  if (record.decision.is_accepted()) {
    if (!record.scores)
      throw validation_error(fmt::format("manifest: accepted record {} has no scores", record.sample_id()));
    if (!ontology.is_anomalous(record.task.scene, record.task.target))
      throw validation_error(fmt::format("manifest: '{}' is not anomalous in scene '{}' ({})", record.task.target,
                                         record.task.scene, record.sample_id()));
  }
}

void write_all(int fd, std::string_view data, const std::filesystem::path& path) {
  while (!data.empty()) {
    const auto n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw io_error(fmt::format("write to '{}' failed: {}", path.string(), std::strerror(errno)));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

}  // namespace

ManifestWriter::ManifestWriter(const std::filesystem::path& path, const Ontology& ontology)
    : path_(path), ontology_(ontology) {
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw io_error(fmt::format("cannot open manifest '{}': {}", path.string(), std::strerror(errno)));
}

ManifestWriter::~ManifestWriter() {
  if (fd_ >= 0) ::close(fd_);
}

void ManifestWriter::append(const CandidateRecord& record) {
  check_writable(record, ontology_);
  const auto line = to_json(record).dump() + "\n";
  std::lock_guard lock(mutex_);
  write_all(fd_, line, path_);
}

void append_manifest(const std::filesystem::path& manifest, const CandidateRecord& record,
                     const std::string& final_image, const Ontology& ontology) {
  CandidateRecord copy = record;
  copy.image_path = copy.decision.is_accepted() ? final_image : std::string{};
  ManifestWriter(manifest, ontology).append(copy);
}

std::vector<CandidateRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error(fmt::format("cannot open manifest '{}'", path.string()));
  std::vector<CandidateRecord> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw parse_error(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

void rewrite_manifest(const std::filesystem::path& path, const std::vector<CandidateRecord>& records,
                      const Ontology& ontology) {
  std::string body;
  for (const auto& r : records) {
    check_writable(r, ontology);
    body += to_json(r).dump();
    body += '\n';
  }
  auto tmp = path;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw io_error(fmt::format("cannot open '{}': {}", tmp.string(), std::strerror(errno)));
  try {
    write_all(fd, body, tmp);
    if (::fsync(fd) != 0) throw io_error(fmt::format("fsync '{}' failed: {}", tmp.string(), std::strerror(errno)));
  } catch (...) {
    ::close(fd);
    std::filesystem::remove(tmp);
    throw;
  }
  ::close(fd);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw io_error(fmt::format("cannot replace manifest '{}': {}", path.string(), ec.message()));
}

}  // namespace anomforge
