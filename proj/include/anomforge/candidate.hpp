#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "anomforge/image.hpp"
#include "anomforge/ontology.hpp"

namespace anomforge {

struct MaskSpec {
  std::string image_id;
  Rect bbox;
  SizeClass size_class = SizeClass::Small;
  bool operator==(const MaskSpec&) const = default;
};

struct GenerationTask {
  std::string task_id;
  std::string image_id;
  std::string scene;
  MaskSpec mask;
  std::string target;
  std::uint64_t seed = 0;
  bool operator==(const GenerationTask&) const = default;
};

// The set Z for one candidate: similarity of the inpainted region to every
// object and taboo label.
struct SimilarityScoreSet {
  std::map<std::string, double, std::less<>> scores;
  std::string target;
  int k = 5;
  bool operator==(const SimilarityScoreSet&) const = default;
};

inline constexpr std::string_view kReasonTargetNotTopK = "target-not-top-k";
inline constexpr std::string_view kReasonProviderError = "provider-error";

struct Decision {
  enum class Status { Pending, Accepted, Rejected };

  Status status = Status::Pending;
  // Set for rejections: "target-not-top-k", "taboo-in-top-k(<label>)" or
  // "provider-error: <message>".
  std::string reason;

  static Decision pending() { return {}; }
  static Decision accepted() { return {Status::Accepted, {}}; }
  static Decision rejected(std::string reason) { return {Status::Rejected, std::move(reason)}; }

  bool is_accepted() const { return status == Status::Accepted; }
  bool is_rejected() const { return status == Status::Rejected; }
  bool is_pending() const { return status == Status::Pending; }
  bool operator==(const Decision&) const = default;
};

std::string taboo_reason(std::string_view label);
std::string_view to_string(Decision::Status status);

// One inpainting result. `region_image` holds the pixels that replace the
// mask; it is empty for records read back from a manifest until loaded from
// `candidate_path`.
struct CandidateRecord {
  GenerationTask task;
  int candidate_index = 0;
  Rect crop_window;
  RasterImage region_image;
  std::optional<SimilarityScoreSet> scores;
  Decision decision;
  // Relative to the dataset root.
  std::string candidate_path;
  std::string image_path;

  // <task-id>-<index>, the id of the sample in the dataset.
  std::string sample_id() const;
};

nlohmann::json to_json(const MaskSpec& mask);
MaskSpec mask_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const GenerationTask& task);
GenerationTask task_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const SimilarityScoreSet& scores);
SimilarityScoreSet scoreset_from_json(const nlohmann::json& doc);

// A manifest line: everything except region pixels.
nlohmann::json to_json(const CandidateRecord& record);
CandidateRecord record_from_json(const nlohmann::json& doc);

}  // namespace anomforge
