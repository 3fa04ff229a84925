#include "anomforge/stages.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "anomforge/error.hpp"
#include "anomforge/parallel.hpp"
#include "anomforge/text.hpp"

namespace anomforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const fs::path& path, std::string_view what) {
  std::ifstream in(path);
  if (!in) throw io_error(fmt::format("cannot open {} '{}'", what, path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw parse_error(fmt::format("{} '{}': {}", what, path.string(), e.what()));
  }
}

void write_text_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
  out.close();
  if (!out) throw io_error(fmt::format("cannot write '{}'", path.string()));
}

std::string sample_file(std::string_view dir, const std::string& sample_id) {
  return fmt::format("{}/{}.png", dir, sample_id);
}

}  // namespace

DatasetInfo load_dataset_info(const fs::path& dataset_dir) {
  const auto doc = read_json_file(dataset_dir / "dataset.json", "dataset index");
  try {
    DatasetInfo info;
    info.root = dataset_dir;
    info.ontology = doc.at("ontology").get<std::string>();
    info.images = doc.at("images").get<std::string>();
    info.seed = doc.at("seed").get<std::uint64_t>();
    info.candidates = doc.at("candidates").get<int>();
    info.per_pair = doc.at("per_pair").get<int>();
    return info;
  } catch (const json::exception& e) {
    throw parse_error(fmt::format("dataset index '{}': {}", (dataset_dir / "dataset.json").string(), e.what()));
  }
}

void save_dataset_info(const DatasetInfo& info) {
  const json doc = {{"ontology", info.ontology},
                    {"images", info.images},
                    {"seed", info.seed},
                    {"candidates", info.candidates},
                    {"per_pair", info.per_pair}};
  write_text_file(info.root / "dataset.json", doc.dump(2) + "\n");
}

std::shared_ptr<const Ontology> load_shared_ontology(const std::string& path) {
#ifdef ANOMFORGE_DEFAULT_ONTOLOGY
  const std::string resolved = path.empty() ? std::string(ANOMFORGE_DEFAULT_ONTOLOGY) : path;
#else
  if (path.empty()) throw validation_error("no ontology given");
  const std::string& resolved = path;
#endif
  return std::make_shared<const Ontology>(load_ontology(resolved));
}

GenSummary run_gen(const ProviderFactory& factory, const GenArgs& args) {
  const auto& config = factory.config();
  const auto& ontology = factory.ontology();
  const auto images = load_image_set(args.images);
  const auto masks = load_masks(args.masks);
  const auto tasks = plan_tasks(ontology, images.images, masks, config.per_pair, config.seed);
  if (tasks.empty()) throw validation_error("gen: no generation tasks (no masks with compatible anomalies)");

  fs::create_directories(args.out);
  const auto manifest = args.out / "manifest.jsonl";
  fs::remove(manifest);
  fs::remove_all(args.out / "candidates");
  fs::remove_all(args.out / "images");
  fs::create_directories(args.out / "candidates");

  DatasetInfo info;
  info.root = args.out;
  if (!config.ontology.empty()) info.ontology = fs::absolute(config.ontology).lexically_normal().string();
  info.images = fs::absolute(args.images).lexically_normal().string();
  info.seed = config.seed;
  info.candidates = config.candidates;
  info.per_pair = config.per_pair;
  save_dataset_info(info);

  const auto inpainter = factory.inpainting();
  GenerationOptions options;
  options.candidates = config.candidates;
  options.crop = config.crop;
  options.prompt_template = config.prompt_template;

  // Pixels go to disk inside the workers; only metadata comes back, and the
  // manifest is appended in task order so it does not depend on --jobs.
  auto per_task = parallel_map(tasks.size(), config.jobs, [&](std::size_t i) {
    auto records = generate_candidates(tasks[i], images.load(tasks[i].image_id), *inpainter, options);
    for (auto& r : records) {
      r.candidate_path = sample_file("candidates", r.sample_id());
      write_png(r.region_image, args.out / r.candidate_path);
      r.region_image = RasterImage();
    }
    return records;
  });

  ManifestWriter writer(manifest, ontology);
  GenSummary summary{tasks.size(), 0};
  for (const auto& records : per_task)
    for (const auto& r : records) {
      writer.append(r);
      ++summary.candidates;
    }
  spdlog::info("gen: {} tasks, {} candidates -> {}", summary.tasks, summary.candidates, manifest.string());
  return summary;
}

FilterSummary run_filter(const ProviderFactory& factory, const fs::path& dataset_dir) {
  const auto& config = factory.config();
  const auto& ontology = factory.ontology();
  const auto info = load_dataset_info(dataset_dir);
  const auto images = load_image_set(info.images);
  auto records = read_manifest(info.manifest());
  if (records.empty()) throw validation_error(fmt::format("filter: manifest '{}' is empty", info.manifest().string()));

  std::vector<std::size_t> pending;
  std::vector<CandidateRecord> batch;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].decision.is_pending()) continue;
    if (records[i].candidate_path.empty())
      throw validation_error(fmt::format("filter: {} has no candidate image", records[i].sample_id()));
    pending.push_back(i);
  }
  batch.resize(pending.size());
  parallel_map(pending.size(), config.jobs, [&](std::size_t j) {
    batch[j] = records[pending[j]];
    batch[j].region_image = read_png(dataset_dir / batch[j].candidate_path);
    return 0;
  });

  if (!batch.empty()) {
    const auto embed = factory.embedding();
    batch = filter_dataset(std::move(batch), *embed, ontology, config.filter_k, config.jobs);
  }

  // Accepted pixels live on in the injected image; rejected ones are dropped
  // and only their manifest line remains.
  fs::create_directories(dataset_dir / "images");
  parallel_map(batch.size(), config.jobs, [&](std::size_t j) {
    auto& r = batch[j];
    if (r.decision.is_accepted()) {
      r.image_path = sample_file("images", r.sample_id());
      write_png(inject(images.load(r.task.image_id), r), dataset_dir / r.image_path);
    }
    r.region_image = RasterImage();
    return 0;
  });
  std::vector<std::string> spent;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    spent.push_back(batch[j].candidate_path);
    batch[j].candidate_path.clear();
    records[pending[j]] = std::move(batch[j]);
  }
  rewrite_manifest(info.manifest(), records, ontology);
  for (const auto& path : spent) fs::remove(dataset_dir / path);
  std::error_code ec;
  if (fs::is_empty(dataset_dir / "candidates", ec)) fs::remove(dataset_dir / "candidates", ec);

  FilterSummary summary;
  for (const auto& r : records) summary.accepted += r.decision.is_accepted() ? 1 : 0;
  spdlog::info("filter: {} pending lines decided (k={}); {} of {} accepted overall", pending.size(), config.filter_k,
               summary.accepted, records.size());
  summary.total = records.size();
  summary.decided = pending.size();
  return summary;
}

std::size_t run_detect(const ProviderFactory& factory, const fs::path& dataset_dir, const fs::path& out) {
  const auto& config = factory.config();
  const auto info = load_dataset_info(dataset_dir);
  const auto records = read_manifest(info.manifest());
  std::vector<const CandidateRecord*> accepted;
  for (const auto& r : records)
    if (r.decision.is_accepted()) accepted.push_back(&r);
  if (accepted.empty()) throw validation_error(fmt::format("detect: dataset '{}' has no accepted images", dataset_dir.string()));
  std::sort(accepted.begin(), accepted.end(),
            [](const CandidateRecord* a, const CandidateRecord* b) { return a->sample_id() < b->sample_id(); });

  const auto embed = factory.embedding();
  const auto regions = factory.regions(fs::path(info.images) / "regions.json");
  const Detector detector(*embed, *regions, factory.ontology(), config.detector);

  const auto lines = parallel_map(accepted.size(), config.jobs, [&](std::size_t i) {
    const auto& r = *accepted[i];
    const auto image = read_png(dataset_dir / r.image_path);
    try {
      auto doc = to_json(detector.detect(image, {r.task.image_id, r.task.target}));
      doc["sample_id"] = r.sample_id();
      return doc.dump();
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("{}: {}", r.sample_id(), e.what()));
    }
  });
  std::string body;
  for (const auto& l : lines) body += l + "\n";
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_text_file(out, body);
  spdlog::info("detect: {} samples -> {}", lines.size(), out.string());
  return lines.size();
}

std::vector<SampleDetection> read_detections(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error(fmt::format("cannot open detections '{}'", path.string()));
  std::vector<SampleDetection> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (trim(line).empty()) continue;
    try {
      const auto doc = json::parse(line);
      out.push_back({doc.at("sample_id").get<std::string>(), detection_from_json(doc)});
    } catch (const json::exception& e) {
      throw parse_error(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return out;
}

fs::path confusion_csv_path(const fs::path& report) {
  auto csv = report;
  csv.replace_extension();
  csv += ".confusion.csv";
  return csv;
}

EvalReport run_eval(const ProviderFactory& factory, const fs::path& dataset_dir, const fs::path& out,
                    const std::optional<fs::path>& detections) {
  const auto& config = factory.config();
  const auto info = load_dataset_info(dataset_dir);
  const auto records = read_manifest(info.manifest());

  EvalReport report;
  if (detections) {
    report = score_detector_results(read_detections(*detections), records, config.eval.top_n);
  } else {
    auto eval_config = config.eval;
    eval_config.jobs = config.jobs;
    const auto vqa = factory.vqa();
    const auto embed = factory.embedding();
    const auto describe = factory.description();
    const ImageLoader loader = [&](const CandidateRecord& r) { return read_png(dataset_dir / r.image_path); };
    report = evaluate(records, loader, {*vqa, *embed, *describe}, eval_config, factory.ontology());
  }

  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_text_file(out, to_json(report).dump(2) + "\n");
  if (!report.confusion.empty()) {
    std::ostringstream csv;
    write_confusion_csv(report, csv);
    write_text_file(confusion_csv_path(out), csv.str());
  }
  spdlog::info("eval: {} top-1 {:.4f} over {} samples -> {}", report.metric, report.top1_accuracy, report.total,
               out.string());
  return report;
}

double ManifestStats::acceptance_rate() const {
  return generated ? static_cast<double>(accepted) / static_cast<double>(generated) : 0.0;
}

ManifestStats manifest_stats(const fs::path& dataset_or_manifest) {
  const auto path = fs::is_directory(dataset_or_manifest) ? dataset_or_manifest / "manifest.jsonl" : dataset_or_manifest;
  std::ifstream in(path);
  if (!in) throw io_error(fmt::format("cannot open manifest '{}'", path.string()));
  ManifestStats stats;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (trim(line).empty()) continue;
    std::string decision;
    try {
      decision = json::parse(line).at("decision").get<std::string>();
    } catch (const json::exception& e) {
      throw parse_error(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    ++stats.generated;
    if (decision == "accepted") ++stats.accepted;
    else if (decision == "rejected") ++stats.rejected;
    else if (decision == "pending") ++stats.pending;
    else throw parse_error(fmt::format("{}:{}: unknown decision '{}'", path.string(), line_no, decision));
  }
  return stats;
}

void print_stats(const ManifestStats& stats, std::ostream& out) {
  out << fmt::format("generated: {}\naccepted: {}\nrejected: {}\npending: {}\nacceptance rate: {:.1f}%\n",
                     stats.generated, stats.accepted, stats.rejected, stats.pending, 100.0 * stats.acceptance_rate());
}

}  // namespace anomforge
