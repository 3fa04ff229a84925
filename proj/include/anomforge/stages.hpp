#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "anomforge/config.hpp"

namespace anomforge {

// ds/dataset.json: where the dataset came from, so later stages can find the
// ontology and base images without repeating flags.
struct DatasetInfo {
  std::filesystem::path root;
  std::string ontology;
  std::string images;
  std::uint64_t seed = 0;
  int candidates = 0;
  int per_pair = 0;

  std::filesystem::path manifest() const { return root / "manifest.jsonl"; }
};

DatasetInfo load_dataset_info(const std::filesystem::path& dataset_dir);
void save_dataset_info(const DatasetInfo& info);

std::shared_ptr<const Ontology> load_shared_ontology(const std::string& path);

struct GenArgs {
  std::filesystem::path images;
  std::filesystem::path masks;
  std::filesystem::path out;
};

struct GenSummary {
  std::size_t tasks = 0;
  std::size_t candidates = 0;
};

// Writes manifest.jsonl (pending lines) and candidates/<sample>.png. An
// existing dataset at `out` is replaced.
GenSummary run_gen(const ProviderFactory& factory, const GenArgs& args);

struct FilterSummary {
  std::size_t total = 0;
  std::size_t accepted = 0;
  std::size_t decided = 0;  // pending lines decided by this run
};

// Decides the pending manifest lines, writes images/<sample>.png for accepted
// ones, rewrites the manifest in place and removes the decided candidates'
// region files. Lines decided by an earlier run are left untouched.
FilterSummary run_filter(const ProviderFactory& factory, const std::filesystem::path& dataset_dir);

// One JSON line per accepted sample: {"sample_id", "function_set", "ranked"}.
std::size_t run_detect(const ProviderFactory& factory, const std::filesystem::path& dataset_dir,
                       const std::filesystem::path& out);

std::vector<SampleDetection> read_detections(const std::filesystem::path& path);

// Writes `out` and, for broad match, the confusion matrix next to it as
// <stem>.confusion.csv. With `detections`, scores detector output instead of
// querying the VQA provider.
EvalReport run_eval(const ProviderFactory& factory, const std::filesystem::path& dataset_dir,
                    const std::filesystem::path& out,
                    const std::optional<std::filesystem::path>& detections = std::nullopt);

std::filesystem::path confusion_csv_path(const std::filesystem::path& report);

struct ManifestStats {
  std::size_t generated = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t pending = 0;

  double acceptance_rate() const;
};

// Accepts a dataset directory or a manifest file.
ManifestStats manifest_stats(const std::filesystem::path& dataset_or_manifest);
void print_stats(const ManifestStats& stats, std::ostream& out);

}  // namespace anomforge
