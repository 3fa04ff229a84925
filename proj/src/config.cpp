#include "anomforge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "anomforge/error.hpp"

namespace anomforge {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, std::string_view message) {
  throw validation_error(fmt::format("{}: {}", path, message));
}

// Walks one JSON object, rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) fail(path_, "must be an object");
  }

  // Call once every key has been read.
  void done() const {
    for (const auto& [key, value] : doc_.items())
      if (!seen_.count(key)) fail(field(key), "unknown key");
  }

  std::string field(std::string_view key) const { return fmt::format("{}.{}", path_, key); }

  const json* get(std::string_view key) {
    seen_.emplace(key);
    auto it = doc_.find(std::string(key));
    return it == doc_.end() ? nullptr : &*it;
  }

  void read(std::string_view key, std::string& out) {
    if (const auto* v = get(key)) {
      if (!v->is_string()) fail(field(key), "must be a string");
      out = v->get<std::string>();
    }
  }

  void read(std::string_view key, double& out) {
    if (const auto* v = get(key)) {
      if (!v->is_number()) fail(field(key), "must be a number");
      out = v->get<double>();
    }
  }

  void read(std::string_view key, bool& out) {
    if (const auto* v = get(key)) {
      if (!v->is_boolean()) fail(field(key), "must be true or false");
      out = v->get<bool>();
    }
  }

  template <typename Int>
  void read_int(std::string_view key, Int& out) {
    if (const auto* v = get(key)) {
      if (!v->is_number_integer()) fail(field(key), "must be an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_unsigned() || v->get<std::int64_t>() >= 0) {
          out = v->get<Int>();
          return;
        }
        fail(field(key), "must be non-negative");
      } else {
        out = v->get<Int>();
      }
    }
  }

  std::optional<Section> child(std::string_view key) {
    if (const auto* v = get(key)) return Section(*v, field(key));
    return std::nullopt;
  }

 private:
  const json& doc_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

ProviderMode parse_mode(const std::string& text, const std::string& path) {
  if (text == "mock") return ProviderMode::Mock;
  if (text == "remote") return ProviderMode::Remote;
  fail(path, fmt::format("must be mock or remote, got '{}'", text));
}

std::string_view to_string(ProviderMode mode) { return mode == ProviderMode::Mock ? "mock" : "remote"; }

void read_provider(Section& parent, std::string_view name, ProviderConfig& out) {
  auto section = parent.child(name);
  if (!section) return;
  std::string mode(to_string(out.mode));
  section->read("mode", mode);
  out.mode = parse_mode(mode, section->field("mode"));
  section->read("url", out.url);
  if (section->get("dim")) {
    std::size_t dim = 0;
    section->read_int("dim", dim);
    out.dim = dim;
  }
  section->read("annotations", out.annotations);
  section->read("mock", out.mock);
  section->read("answer", out.answer);
  section->done();
}

json provider_json(const ProviderConfig& p) {
  json doc = {{"mode", to_string(p.mode)}};
  if (!p.url.empty()) doc["url"] = p.url;
  if (p.dim) doc["dim"] = *p.dim;
  if (!p.annotations.empty()) doc["annotations"] = p.annotations;
  if (p.mock != "echo-truth") doc["mock"] = p.mock;
  if (!p.answer.empty()) doc["answer"] = p.answer;
  return doc;
}

void validate_provider(const ProviderConfig& p, std::string_view name) {
  const auto path = fmt::format("config.providers.{}", name);
  if (p.mode == ProviderMode::Remote) {
    if (p.url.empty()) fail(path + ".url", "required in remote mode");
    try {
      parse_endpoint(p.url);
    } catch (const Error& e) {
      fail(path + ".url", e.what());
    }
  }
  if (p.dim && *p.dim == 0) fail(path + ".dim", "must be >= 1");
}

}  // namespace

MockSettings PipelineConfig::mock_settings() const {
  MockSettings s;
  s.seed = mock.seed.value_or(seed);
  s.dim = mock.dim;
  s.epsilon = mock.epsilon;
  s.category_weight = mock.category_weight;
  return s;
}

void PipelineConfig::validate() const {
  if (jobs < 1) fail("config.jobs", "must be >= 1");
  if (mock.dim < 2) fail("config.mock.dim", "must be >= 2");
  if (!(mock.epsilon >= 0.0)) fail("config.mock.epsilon", "must be >= 0");
  if (!(mock.category_weight >= 0.0)) fail("config.mock.category_weight", "must be >= 0");
  if (!(mock.artifact_rate >= 0.0 && mock.artifact_rate <= 1.0)) fail("config.mock.artifact_rate", "must be in [0, 1]");
  validate_provider(embed, "embed");
  validate_provider(inpaint, "inpaint");
  validate_provider(regions, "regions");
  validate_provider(vqa, "vqa");
  validate_provider(describe, "describe");
  if (embed.mode == ProviderMode::Remote && !embed.dim)
    fail("config.providers.embed.dim", "required in remote mode");
  if (vqa.mode == ProviderMode::Mock) {
    if (vqa.mock != "echo-truth" && vqa.mock != "fixed")
      fail("config.providers.vqa.mock", fmt::format("must be echo-truth or fixed, got '{}'", vqa.mock));
    if (vqa.mock == "fixed" && vqa.answer.empty()) fail("config.providers.vqa.answer", "required for the fixed mock");
  }
  if (candidates < 1) fail("config.generation.candidates", "must be >= 1");
  if (per_pair < 1) fail("config.generation.per_pair", "must be >= 1");
  if (prompt_template.find("{label}") == std::string::npos)
    fail("config.generation.prompt_template", "must contain {label}");
  if (!(crop.expand >= 1.0)) fail("config.generation.crop_expand", "must be >= 1");
  if (crop.min_size < 0) fail("config.generation.crop_min_size", "must be >= 0");
  if (filter_k < 1) fail("config.filter.k", "must be >= 1");
  if (detector.k_kb < 1) fail("config.detector.k_kb", "must be >= 1");
  if (detector.top_n < 1) fail("config.detector.top", "must be >= 1");
  if (eval.top_n != 1 && eval.top_n != 3) fail("config.eval.top", "must be 1 or 3");
  if (eval.prompt && eval.prompt->find_first_not_of(" \t\r\n") == std::string::npos)
    fail("config.eval.prompt", "must not be empty");
}

PipelineConfig config_from_json(const json& doc) {
  PipelineConfig c;
  {
    Section root(doc, "config");
    root.read("ontology", c.ontology);
    root.read_int("seed", c.seed);
    root.read_int("jobs", c.jobs);
    root.read("trace", c.trace);
    if (auto mock = root.child("mock")) {
      if (mock->get("seed")) {
        std::uint64_t seed = 0;
        mock->read_int("seed", seed);
        c.mock.seed = seed;
      }
      mock->read_int("dim", c.mock.dim);
      mock->read("epsilon", c.mock.epsilon);
      mock->read("category_weight", c.mock.category_weight);
      mock->read("artifact_rate", c.mock.artifact_rate);
      mock->done();
    }
    if (auto providers = root.child("providers")) {
      read_provider(*providers, "embed", c.embed);
      read_provider(*providers, "inpaint", c.inpaint);
      read_provider(*providers, "regions", c.regions);
      read_provider(*providers, "vqa", c.vqa);
      read_provider(*providers, "describe", c.describe);
      providers->done();
    }
    if (auto gen = root.child("generation")) {
      gen->read_int("candidates", c.candidates);
      gen->read_int("per_pair", c.per_pair);
      gen->read("prompt_template", c.prompt_template);
      gen->read("crop_expand", c.crop.expand);
      gen->read_int("crop_min_size", c.crop.min_size);
      gen->done();
    }
    if (auto filter = root.child("filter")) {
      filter->read_int("k", c.filter_k);
      filter->done();
    }
    if (auto det = root.child("detector")) {
      std::string functions(to_string(c.detector.function_set));
      det->read("functions", functions);
      try {
        c.detector.function_set = parse_function_set(functions);
      } catch (const Error& e) {
        fail(det->field("functions"), e.what());
      }
      det->read_int("k_kb", c.detector.k_kb);
      det->read_int("top", c.detector.top_n);
      det->done();
    }
    if (auto ev = root.child("eval")) {
      std::string metric(to_string(c.eval.metric));
      ev->read("metric", metric);
      try {
        c.eval.metric = parse_metric(metric);
      } catch (const Error& e) {
        fail(ev->field("metric"), e.what());
      }
      ev->read_int("top", c.eval.top_n);
      if (ev->get("prompt")) {
        std::string prompt;
        ev->read("prompt", prompt);
        c.eval.prompt = prompt;
      }
      ev->read("use_descriptions", c.eval.use_descriptions);
      ev->done();
    }
    root.done();
  }
  c.validate();
  return c;
}

json to_json(const PipelineConfig& c) {
  json mock = {{"dim", c.mock.dim},
               {"epsilon", c.mock.epsilon},
               {"category_weight", c.mock.category_weight},
               {"artifact_rate", c.mock.artifact_rate}};
  if (c.mock.seed) mock["seed"] = *c.mock.seed;
  json doc = {
      {"seed", c.seed},
      {"jobs", c.jobs},
      {"mock", mock},
      {"providers",
       {{"embed", provider_json(c.embed)},
        {"inpaint", provider_json(c.inpaint)},
        {"regions", provider_json(c.regions)},
        {"vqa", provider_json(c.vqa)},
        {"describe", provider_json(c.describe)}}},
      {"generation",
       {{"candidates", c.candidates},
        {"per_pair", c.per_pair},
        {"prompt_template", c.prompt_template},
        {"crop_expand", c.crop.expand},
        {"crop_min_size", c.crop.min_size}}},
      {"filter", {{"k", c.filter_k}}},
      {"detector",
       {{"functions", to_string(c.detector.function_set)}, {"k_kb", c.detector.k_kb}, {"top", c.detector.top_n}}},
      {"eval",
       {{"metric", to_string(c.eval.metric)}, {"top", c.eval.top_n}, {"use_descriptions", c.eval.use_descriptions}}},
  };
  if (!c.ontology.empty()) doc["ontology"] = c.ontology;
  if (!c.trace.empty()) doc["trace"] = c.trace;
  if (c.eval.prompt) doc["eval"]["prompt"] = *c.eval.prompt;
  return doc;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error(fmt::format("cannot read config '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw parse_error(fmt::format("config '{}': {}", path.string(), e.what()));
  }
  auto config = config_from_json(doc);
  // Relative paths inside the config are relative to the config file.
  const auto base = path.parent_path();
  const auto rebase = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  rebase(config.ontology);
  rebase(config.trace);
  rebase(config.regions.annotations);
  return config;
}

void apply_env_overrides(PipelineConfig& config) {
  const auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  const auto url = [&](const char* name, ProviderConfig& p) {
    if (auto v = env(name)) {
      p.mode = ProviderMode::Remote;
      p.url = *v;
    }
  };
  url("ANOMFORGE_EMBED_URL", config.embed);
  url("ANOMFORGE_INPAINT_URL", config.inpaint);
  url("ANOMFORGE_REGIONS_URL", config.regions);
  url("ANOMFORGE_VQA_URL", config.vqa);
  url("ANOMFORGE_DESCRIBE_URL", config.describe);
  if (auto v = env("ANOMFORGE_EMBED_DIM")) {
    try {
      std::size_t used = 0;
      const auto dim = std::stoul(*v, &used);
      if (used != v->size()) throw std::invalid_argument("trailing characters");
      config.embed.dim = dim;
    } catch (const std::exception&) {
      fail("env.ANOMFORGE_EMBED_DIM", fmt::format("must be a positive integer, got '{}'", *v));
    }
  }
  if (auto v = env("ANOMFORGE_TRACE")) config.trace = *v;
  config.validate();
}

ProviderFactory::ProviderFactory(PipelineConfig config, std::shared_ptr<const Ontology> ontology)
    : config_(std::move(config)), ontology_(std::move(ontology)) {
  config_.validate();
  space_ = std::make_shared<const MockSemanticSpace>(*ontology_, config_.mock_settings());
  if (!config_.trace.empty()) trace_ = std::make_shared<TraceLog>(config_.trace);
}

HttpJsonTransport ProviderFactory::transport(const ProviderConfig& provider) const {
  return HttpJsonTransport(provider.url, trace_);
}

std::unique_ptr<EmbeddingProvider> ProviderFactory::embedding() const {
  if (config_.embed.mode == ProviderMode::Remote)
    return std::make_unique<RemoteEmbeddingProvider>(transport(config_.embed), *config_.embed.dim);
  return std::make_unique<MockEmbeddingProvider>(space_);
}

std::unique_ptr<InpaintingProvider> ProviderFactory::inpainting() const {
  if (config_.inpaint.mode == ProviderMode::Remote)
    return std::make_unique<RemoteInpaintingProvider>(transport(config_.inpaint));
  return std::make_unique<MockInpaintingProvider>(space_, *ontology_, config_.mock.artifact_rate);
}

std::unique_ptr<RegionProvider> ProviderFactory::regions(const std::filesystem::path& default_annotations) const {
  if (config_.regions.mode == ProviderMode::Remote)
    return std::make_unique<RemoteRegionProvider>(transport(config_.regions));
  const std::filesystem::path path =
      config_.regions.annotations.empty() ? default_annotations : std::filesystem::path(config_.regions.annotations);
  return std::make_unique<MockRegionProvider>(load_region_annotations(path));
}

std::unique_ptr<VqaProvider> ProviderFactory::vqa() const {
  if (config_.vqa.mode == ProviderMode::Remote) return std::make_unique<RemoteVqaProvider>(transport(config_.vqa));
  if (config_.vqa.mock == "fixed") return std::make_unique<FixedAnswerVqaProvider>(config_.vqa.answer);
  return std::make_unique<EchoTruthVqaProvider>();
}

std::unique_ptr<DescriptionProvider> ProviderFactory::description() const {
  if (config_.describe.mode == ProviderMode::Remote)
    return std::make_unique<RemoteDescriptionProvider>(transport(config_.describe));
  return std::make_unique<MockDescriptionProvider>(ontology_);
}

}  // namespace anomforge
