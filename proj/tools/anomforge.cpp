#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "anomforge/config.hpp"
#include "anomforge/error.hpp"
#include "anomforge/fixtures.hpp"
#include "anomforge/stages.hpp"

namespace fs = std::filesystem;
using namespace anomforge;

namespace {

struct GlobalFlags {
  std::string config;
  std::string ontology;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::string log_level = "warn";
};

// Defaults, then the config file, then environment, then flags.
PipelineConfig resolve_config(const GlobalFlags& flags) {
  PipelineConfig config = flags.config.empty() ? PipelineConfig{} : load_config(flags.config);
  apply_env_overrides(config);
  if (!flags.ontology.empty()) config.ontology = flags.ontology;
  if (flags.seed) config.seed = *flags.seed;
  if (flags.jobs) config.jobs = *flags.jobs;
  config.validate();
  return config;
}

// Stages after gen default to the ontology the dataset was generated with.
void adopt_dataset_ontology(PipelineConfig& config, const GlobalFlags& flags, const fs::path& dataset) {
  if (!flags.ontology.empty() || !config.ontology.empty()) return;
  if (!fs::exists(dataset / "dataset.json")) return;
  config.ontology = load_dataset_info(dataset).ontology;
}

ProviderFactory make_factory(PipelineConfig config) {
  auto ontology = load_shared_ontology(config.ontology);
  return ProviderFactory(std::move(config), std::move(ontology));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anomforge: contextual-anomaly benchmark generation and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--config", flags.config, "JSON pipeline config")->check(CLI::ExistingFile);
  app.add_option("--ontology", flags.ontology, "ontology JSON (default: bundled)");
  app.add_option("--seed", flags.seed, "global seed");
  app.add_option("--jobs", flags.jobs, "worker threads (default 1)")->check(CLI::PositiveNumber);
  app.add_option("--log-level", flags.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  auto* gen = app.add_subcommand("gen", "plan tasks and inpaint candidates");
  GenArgs gen_args;
  std::optional<int> candidates;
  std::optional<int> per_pair;
  gen->add_option("--images", gen_args.images, "base image directory with images.json")->required();
  gen->add_option("--masks", gen_args.masks, "masks JSON")->required();
  gen->add_option("--out", gen_args.out, "dataset directory")->required();
  gen->add_option("--candidates", candidates, "candidates per task (default 10)");
  gen->add_option("--per-pair", per_pair, "targets per (image, mask) pair (default 4)");

  auto* filter = app.add_subcommand("filter", "score candidates and keep the top-k ones");
  fs::path filter_ds;
  std::optional<int> filter_k;
  filter->add_option("--dataset", filter_ds, "dataset directory")->required();
  filter->add_option("--k", filter_k, "top-k (default 5)");

  auto* detect = app.add_subcommand("detect", "rank regions of accepted images by anomaly score");
  fs::path detect_ds;
  fs::path detect_out;
  std::optional<std::string> functions;
  std::optional<int> detect_top;
  std::optional<int> k_kb;
  detect->add_option("--dataset", detect_ds, "dataset directory")->required();
  detect->add_option("--functions", functions, "all|visual|knowledge")
      ->check(CLI::IsMember({"all", "visual", "knowledge"}));
  detect->add_option("--top", detect_top, "regions kept per image (default 3)");
  detect->add_option("--k-kb", k_kb, "descriptions retrieved per region (default 5)");
  detect->add_option("--out", detect_out, "results JSONL")->required();

  auto* eval = app.add_subcommand("eval", "score a VQA provider or detector results");
  fs::path eval_ds;
  fs::path eval_out;
  std::optional<std::string> metric;
  std::optional<int> eval_top;
  std::optional<std::string> prompt;
  std::optional<fs::path> detections;
  bool no_descriptions = false;
  eval->add_option("--dataset", eval_ds, "dataset directory")->required();
  eval->add_option("--metric", metric, "word|class|broad");
  eval->add_option("--top", eval_top, "1 or 3")->check(CLI::IsMember({1, 3}));
  eval->add_option("--prompt", prompt, "VQA prompt override");
  eval->add_option("--detections", detections, "score detect output instead of VQA");
  eval->add_flag("--no-descriptions", no_descriptions, "embed VQA answers without generated descriptions");
  eval->add_option("--out", eval_out, "report JSON")->required();

  auto* stats = app.add_subcommand("stats", "acceptance statistics of a manifest");
  fs::path stats_path;
  stats->add_option("path,--dataset", stats_path, "dataset directory or manifest.jsonl")->required();

  auto* fixtures = app.add_subcommand("make-fixtures", "write synthetic base images, masks and regions");
  fs::path fixtures_out;
  FixtureOptions fixture_options;
  fixtures->add_option("--out", fixtures_out, "output directory")->required();
  fixtures->add_option("--images-per-scene", fixture_options.images_per_scene, "images per scene (default 2)");
  fixtures->add_option("--masks-per-image", fixture_options.masks_per_image, "masks per image (default 3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "anomforge: usage error: " << e.what() << "\n\n" << app.help();
    return exit_code_for(ErrorKind::Usage);
  }
  spdlog::set_level(spdlog::level::from_str(flags.log_level));
  spdlog::set_pattern("[%l] %v");

  const auto* sub = app.get_subcommands().front();
  const std::string stage = sub->get_name();
  try {
    if (sub == stats) {
      print_stats(manifest_stats(stats_path), std::cout);
      return 0;
    }

    auto config = resolve_config(flags);
    if (sub == gen) {
      if (candidates) config.candidates = *candidates;
      if (per_pair) config.per_pair = *per_pair;
      config.validate();
      const auto summary = run_gen(make_factory(std::move(config)), gen_args);
      std::cout << fmt::format("{} tasks, {} candidates\n", summary.tasks, summary.candidates);
    } else if (sub == filter) {
      adopt_dataset_ontology(config, flags, filter_ds);
      if (filter_k) config.filter_k = *filter_k;
      config.validate();
      const auto summary = run_filter(make_factory(std::move(config)), filter_ds);
      std::cout << fmt::format("{} lines decided; {} of {} candidates accepted\n", summary.decided, summary.accepted,
                               summary.total);
    } else if (sub == detect) {
      adopt_dataset_ontology(config, flags, detect_ds);
      if (functions) config.detector.function_set = parse_function_set(*functions);
      if (detect_top) config.detector.top_n = *detect_top;
      if (k_kb) config.detector.k_kb = *k_kb;
      config.validate();
      const auto n = run_detect(make_factory(std::move(config)), detect_ds, detect_out);
      std::cout << fmt::format("{} samples\n", n);
    } else if (sub == eval) {
      adopt_dataset_ontology(config, flags, eval_ds);
      if (metric) config.eval.metric = parse_metric(*metric);
      if (eval_top) config.eval.top_n = *eval_top;
      if (prompt) config.eval.prompt = *prompt;
      if (no_descriptions) config.eval.use_descriptions = false;
      config.validate();
      const auto report = run_eval(make_factory(std::move(config)), eval_ds, eval_out, detections);
      std::cout << fmt::format("{}: top-1 {:.4f}", report.metric, report.top1_accuracy);
      if (report.top3_accuracy) std::cout << fmt::format(", top-3 {:.4f}", *report.top3_accuracy);
      std::cout << fmt::format(" over {} samples ({} failed)\n", report.total, report.failures.size());
    } else if (sub == fixtures) {
      fixture_options.seed = config.seed;
      const auto ontology = load_shared_ontology(config.ontology);
      const MockSemanticSpace space(*ontology, config.mock_settings());
      const auto set = write_fixture_set(*ontology, space, fixtures_out, fixture_options);
      std::cout << fmt::format("{} images, {} masks -> {}\n", set.images.images.size(), set.masks.size(),
                               fixtures_out.string());
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << fmt::format("anomforge {}: error: {}\n", stage, e.what());
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << fmt::format("anomforge {}: error: {}\n", stage, e.what());
    return exit_code_for(ErrorKind::Io);
  } catch (const std::exception& e) {
    std::cerr << fmt::format("anomforge {}: internal error: {}\n", stage, e.what());
    return 1;
  }
}
