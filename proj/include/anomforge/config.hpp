#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "anomforge/detector.hpp"
#include "anomforge/evalharness.hpp"
#include "anomforge/genpipe.hpp"
#include "anomforge/mock_providers.hpp"
#include "anomforge/remote_providers.hpp"

namespace anomforge {

enum class ProviderMode { Mock, Remote };

struct ProviderConfig {
  ProviderMode mode = ProviderMode::Mock;
  std::string url;                  // remote only
  std::optional<std::size_t> dim;   // embed, remote only
  std::string annotations;          // regions, mock only; empty: <images>/regions.json
  std::string mock = "echo-truth";  // vqa, mock only: echo-truth | fixed
  std::string answer;               // vqa, mock "fixed"
};

struct MockConfig {
  std::optional<std::uint64_t> seed;  // unset: the global seed
  std::size_t dim = 64;
  double epsilon = 0.0;
  double category_weight = 0.75;
  double artifact_rate = 0.0;
};

struct PipelineConfig {
  std::string ontology;  // empty: the bundled ontology
  std::uint64_t seed = 7;
  unsigned jobs = 1;
  std::string trace;  // empty: no wire trace
  MockConfig mock;
  ProviderConfig embed;
  ProviderConfig inpaint;
  ProviderConfig regions;
  ProviderConfig vqa;
  ProviderConfig describe;

  int candidates = kDefaultCandidates;
  int per_pair = kDefaultPerPair;
  std::string prompt_template = std::string(kDefaultInpaintTemplate);
  CropPolicy crop;

  int filter_k = kDefaultFilterK;

  DetectOptions detector;
  EvalConfig eval;

  MockSettings mock_settings() const;
  // Field-path validation errors, e.g. "config.mock.epsilon: must be >= 0".
  void validate() const;
};

// Unknown keys are rejected so typos do not silently fall back to defaults.
PipelineConfig config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

// ANOMFORGE_{EMBED,INPAINT,REGIONS,VQA,DESCRIBE}_URL switch that provider to
// remote mode; ANOMFORGE_EMBED_DIM and ANOMFORGE_TRACE override their fields.
void apply_env_overrides(PipelineConfig& config);

// Builds providers on demand from a validated config.
class ProviderFactory {
 public:
  ProviderFactory(PipelineConfig config, std::shared_ptr<const Ontology> ontology);

  const PipelineConfig& config() const { return config_; }
  const Ontology& ontology() const { return *ontology_; }
  std::shared_ptr<const MockSemanticSpace> space() const { return space_; }

  std::unique_ptr<EmbeddingProvider> embedding() const;
  std::unique_ptr<InpaintingProvider> inpainting() const;
  std::unique_ptr<RegionProvider> regions(const std::filesystem::path& default_annotations) const;
  std::unique_ptr<VqaProvider> vqa() const;
  std::unique_ptr<DescriptionProvider> description() const;

 private:
  HttpJsonTransport transport(const ProviderConfig& provider) const;

  PipelineConfig config_;
  std::shared_ptr<const Ontology> ontology_;
  std::shared_ptr<const MockSemanticSpace> space_;
  std::shared_ptr<TraceLog> trace_;
};

}  // namespace anomforge
