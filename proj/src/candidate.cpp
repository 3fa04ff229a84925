#include "anomforge/candidate.hpp"

#include <fmt/format.h>

#include "anomforge/error.hpp"

namespace anomforge {

using nlohmann::json;

std::string taboo_reason(std::string_view label) { return fmt::format("taboo-in-top-k({})", label); }

std::string_view to_string(Decision::Status status) {
  switch (status) {
    case Decision::Status::Pending: return "pending";
    case Decision::Status::Accepted: return "accepted";
    case Decision::Status::Rejected: return "rejected";
  }
  return "pending";
}

namespace {

Decision::Status parse_status(std::string_view text) {
  if (text == "pending") return Decision::Status::Pending;
  if (text == "accepted") return Decision::Status::Accepted;
  if (text == "rejected") return Decision::Status::Rejected;
  throw parse_error(fmt::format("unknown decision '{}'", text));
}

}  // namespace

std::string CandidateRecord::sample_id() const { return fmt::format("{}-{}", task.task_id, candidate_index); }

json to_json(const MaskSpec& mask) {
  auto doc = to_json(mask.bbox);
  doc["image_id"] = mask.image_id;
  doc["size_class"] = to_string(mask.size_class);
  return doc;
}

MaskSpec mask_from_json(const json& doc) {
  try {
    return {doc.at("image_id").get<std::string>(), rect_from_json(doc),
            parse_size_class(doc.at("size_class").get<std::string>())};
  } catch (const json::exception& e) {
    throw parse_error(fmt::format("mask: {}", e.what()));
  }
}

json to_json(const GenerationTask& task) {
  return {{"task_id", task.task_id}, {"image_id", task.image_id}, {"scene", task.scene},
          {"mask", to_json(task.mask)}, {"target", task.target},   {"seed", task.seed}};
}

GenerationTask task_from_json(const json& doc) {
  try {
    return {doc.at("task_id").get<std::string>(), doc.at("image_id").get<std::string>(),
            doc.at("scene").get<std::string>(),   mask_from_json(doc.at("mask")),
            doc.at("target").get<std::string>(),  doc.at("seed").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw parse_error(fmt::format("task: {}", e.what()));
  }
}

json to_json(const SimilarityScoreSet& scores) {
  json values = json::object();
  for (const auto& [label, score] : scores.scores) values[label] = score;
  return {{"target", scores.target}, {"k", scores.k}, {"values", values}};
}

SimilarityScoreSet scoreset_from_json(const json& doc) {
  try {
    SimilarityScoreSet out;
    out.target = doc.at("target").get<std::string>();
    out.k = doc.at("k").get<int>();
    for (const auto& [label, score] : doc.at("values").items()) out.scores.emplace(label, score.get<double>());
    return out;
  } catch (const json::exception& e) {
    throw parse_error(fmt::format("scores: {}", e.what()));
  }
}

json to_json(const CandidateRecord& record) {
  json doc = {{"task", to_json(record.task)},
              {"candidate_index", record.candidate_index},
              {"crop_window", to_json(record.crop_window)},
              {"label", record.task.target},
              {"decision", to_string(record.decision.status)}};
  if (!record.candidate_path.empty()) doc["candidate_path"] = record.candidate_path;
  if (record.decision.is_rejected()) doc["reason"] = record.decision.reason;
  if (record.scores) doc["scores"] = to_json(*record.scores);
  if (record.decision.is_accepted()) doc["image_path"] = record.image_path;
  return doc;
}

CandidateRecord record_from_json(const json& doc) {
  try {
    CandidateRecord r;
    r.task = task_from_json(doc.at("task"));
    r.candidate_index = doc.at("candidate_index").get<int>();
    r.crop_window = rect_from_json(doc.at("crop_window"));
    r.decision.status = parse_status(doc.at("decision").get<std::string>());
    r.decision.reason = doc.value("reason", std::string{});
    if (doc.contains("scores")) r.scores = scoreset_from_json(doc.at("scores"));
    r.candidate_path = doc.value("candidate_path", std::string{});
    r.image_path = doc.value("image_path", std::string{});
    if (doc.contains("label") && doc.at("label").get<std::string>() != r.task.target)
      throw validation_error(fmt::format("manifest line {}: label '{}' differs from task target '{}'",
                                         r.sample_id(), doc.at("label").get<std::string>(), r.task.target));
    return r;
  } catch (const json::exception& e) {
    throw parse_error(fmt::format("manifest line: {}", e.what()));
  }
}

}  // namespace anomforge
