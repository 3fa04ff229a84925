#include <doctest.h>

#include <cstdlib>

#include "anomforge/config.hpp"
#include "test_support.hpp"

using namespace anomforge;
using nlohmann::json;

namespace {

std::string error_of(const json& doc) {
  try {
    config_from_json(doc);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    return e.what();
  }
  return {};
}

// Sets an environment variable for the lifetime of the guard.
class EnvGuard {
 public:
  EnvGuard(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~EnvGuard() { ::unsetenv(name_); }

 private:
  const char* name_;
};

}  // namespace

TEST_CASE("defaults") {
  const auto c = config_from_json(json::object());
  CHECK(c.seed == 7);
  CHECK(c.jobs == 1);
  CHECK(c.candidates == 10);
  CHECK(c.per_pair == 4);
  CHECK(c.filter_k == 5);
  CHECK(c.detector.k_kb == 5);
  CHECK(c.detector.top_n == 3);
  CHECK(c.mock.dim == 64);
  CHECK(c.mock_settings().seed == 7);
  CHECK(c.embed.mode == ProviderMode::Mock);
  CHECK(c.eval.metric == Metric::WordMatch);
}

TEST_CASE("validation errors name the field") {
  CHECK(error_of({{"mock", {{"epsilon", -0.5}}}}) == "config.mock.epsilon: must be >= 0");
  CHECK(error_of({{"mock", {{"artifact_rate", 2.0}}}}) == "config.mock.artifact_rate: must be in [0, 1]");
  CHECK(error_of({{"filter", {{"k", 0}}}}) == "config.filter.k: must be >= 1");
  CHECK(error_of({{"eval", {{"top", 2}}}}) == "config.eval.top: must be 1 or 3");
  CHECK(error_of({{"jobs", -1}}) == "config.jobs: must be non-negative");
  CHECK(error_of({{"seed", "seven"}}) == "config.seed: must be an integer");
  CHECK(error_of({{"generation", {{"prompt_template", "a photo"}}}}) ==
        "config.generation.prompt_template: must contain {label}");
  CHECK(error_of({{"providers", {{"embed", {{"mode", "remote"}}}}}}) ==
        "config.providers.embed.url: required in remote mode");
  CHECK(error_of({{"providers", {{"embed", {{"mode", "remote"}, {"url", "http://h:1/embed"}}}}}}) ==
        "config.providers.embed.dim: required in remote mode");
  CHECK(error_of({{"providers", {{"vqa", {{"mock", "fixed"}}}}}}) ==
        "config.providers.vqa.answer: required for the fixed mock");
  CHECK(error_of({{"detector", {{"functions", "most"}}}}).rfind("config.detector.functions:", 0) == 0);
}

TEST_CASE("unknown keys are rejected") {
  CHECK(error_of({{"sed", 3}}) == "config.sed: unknown key");
  CHECK(error_of({{"mock", {{"epsilom", 0.1}}}}) == "config.mock.epsilom: unknown key");
  CHECK(error_of({{"providers", {{"embedd", json::object()}}}}) == "config.providers.embedd: unknown key");
  CHECK(error_of({{"providers", {{"vqa", {{"anwser", "x"}}}}}}) == "config.providers.vqa.anwser: unknown key");
  CHECK(error_of(json::array()) == "config: must be an object");
}

TEST_CASE("round trip and file loading") {
  const json doc = {{"seed", 99},
                    {"mock", {{"epsilon", 0.25}, {"seed", 3}}},
                    {"providers", {{"vqa", {{"mock", "fixed"}, {"answer", "an alpaca"}}},
                                   {"regions", {{"annotations", "regions.json"}}}}},
                    {"generation", {{"candidates", 4}}},
                    {"eval", {{"metric", "broad"}, {"top", 3}, {"prompt", "what?"}}}};
  const auto c = config_from_json(doc);
  CHECK(c.mock_settings().seed == 3);
  CHECK(c.mock_settings().epsilon == 0.25);
  CHECK(c.eval.prompt == "what?");
  const auto again = config_from_json(to_json(c));
  CHECK(to_json(again) == to_json(c));

  testing::TempDir dir;
  std::filesystem::create_directories(dir / "conf");
  std::ofstream(dir / "conf" / "c.json") << doc.dump();
  const auto loaded = load_config(dir / "conf" / "c.json");
  CHECK(loaded.regions.annotations == (dir / "conf" / "regions.json").string());

  std::ofstream(dir / "bad.json") << "{not json";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), Error);
  try {
    load_config(dir / "missing.json");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("environment overrides") {
  PipelineConfig c;
  SUBCASE("an endpoint switches the provider to remote") {
    EnvGuard url("ANOMFORGE_EMBED_URL", "http://127.0.0.1:9/embed");
    EnvGuard dim("ANOMFORGE_EMBED_DIM", "512");
    apply_env_overrides(c);
    CHECK(c.embed.mode == ProviderMode::Remote);
    CHECK(c.embed.url == "http://127.0.0.1:9/embed");
    CHECK(c.embed.dim == 512u);
    CHECK(c.vqa.mode == ProviderMode::Mock);
  }
  SUBCASE("bad dimension") {
    EnvGuard dim("ANOMFORGE_EMBED_DIM", "12x");
    CHECK_THROWS_WITH_AS(apply_env_overrides(c), doctest::Contains("env.ANOMFORGE_EMBED_DIM"), Error);
  }
  SUBCASE("remote embedding without a dimension fails validation") {
    EnvGuard url("ANOMFORGE_EMBED_URL", "http://127.0.0.1:9/embed");
    CHECK_THROWS_AS(apply_env_overrides(c), Error);
  }
}

TEST_CASE("provider factory") {
  PipelineConfig c;
  c.vqa.mock = "fixed";
  c.vqa.answer = "an alpaca";
  const ProviderFactory f(c, testing::bundled_ontology());
  CHECK(f.embedding()->dim() == 64);
  CHECK(f.vqa()->answer(RasterImage(2, 2), "q") == "an alpaca");
  CHECK(f.description()->describe("apple") == description_of(f.ontology(), "apple"));
  CHECK_THROWS_AS(f.regions("/nonexistent/regions.json"), Error);
  CHECK(f.space()->dim() == 64);

  PipelineConfig bad;
  bad.filter_k = 0;
  CHECK_THROWS_AS(ProviderFactory(bad, testing::bundled_ontology()), Error);
}
