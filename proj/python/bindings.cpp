#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "anomforge/config.hpp"
#include "anomforge/detector.hpp"
#include "anomforge/error.hpp"
#include "anomforge/evalharness.hpp"
#include "anomforge/filter.hpp"
#include "anomforge/fixtures.hpp"
#include "anomforge/stages.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace anomforge;

namespace {

using Scores = std::map<std::string, double, std::less<>>;

PipelineConfig parse_config(const std::string& config_json) {
  auto config = config_json.empty() ? PipelineConfig{} : config_from_json(nlohmann::json::parse(config_json));
  config.validate();
  return config;
}

ProviderFactory make_factory(const std::string& config_json) {
  auto config = parse_config(config_json);
  auto ontology = load_shared_ontology(config.ontology);
  return ProviderFactory(std::move(config), std::move(ontology));
}

std::vector<EmbeddingVector> to_embeddings(const std::vector<std::vector<double>>& rows) {
  std::vector<EmbeddingVector> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.emplace_back(r);
  return out;
}

SimilarityScoreSet make_scoreset(const Scores& scores, const std::string& target, int k) {
  SimilarityScoreSet s;
  s.scores = scores;
  s.target = target;
  s.k = k;
  return s;
}

}  // namespace

PYBIND11_MODULE(_anomforge, m) {
  m.doc() = "Native core of the anomforge benchmark pipeline";

  static py::exception<Error> base(m, "AnomforgeError");
  static py::exception<Error> parse(m, "ParseError", base.ptr());
  static py::exception<Error> validation(m, "ValidationError", base.ptr());
  static py::exception<Error> provider(m, "ProviderError", base.ptr());
  static py::exception<Error> io(m, "IoError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::Parse: parse(e.what()); break;
        case ErrorKind::Validation: validation(e.what()); break;
        case ErrorKind::Provider: provider(e.what()); break;
        case ErrorKind::Io: io(e.what()); break;
        default: base(e.what()); break;
      }
    } catch (const nlohmann::json::exception& e) {
      parse(e.what());
    }
  });

  py::class_<Ontology, std::shared_ptr<Ontology>>(m, "Ontology")
      .def_property_readonly("object_labels", &Ontology::object_labels)
      .def_property_readonly("taboo_labels", &Ontology::taboo_labels)
      .def_property_readonly("scene_names",
                             [](const Ontology& o) {
                               std::vector<std::string> out;
                               for (const auto& s : o.scenes()) out.push_back(s.name);
                               return out;
                             })
      .def_property_readonly("broad_categories",
                             [](const Ontology& o) {
                               std::vector<std::string> out;
                               for (const auto& c : o.broad_categories()) out.push_back(c.label);
                               return out;
                             })
      .def("is_anomalous", &Ontology::is_anomalous, py::arg("scene"), py::arg("label"))
      .def("describe_label", &Ontology::describe_label, py::arg("label"))
      .def("size_class", [](const Ontology& o, const std::string& label) {
        return std::string(to_string(o.object(label).size_class));
      })
      .def("broad_category", [](const Ontology& o, const std::string& label) { return o.object(label).broad_category; })
      .def("anomalous_objects",
           [](const Ontology& o, const std::string& scene, const std::string& size) {
             std::vector<std::string> out;
             for (const auto& obj : anomalous_objects_for(o, scene, parse_size_class(size))) out.push_back(obj.label);
             return out;
           },
           py::arg("scene"), py::arg("size_class"))
      .def("to_json", [](const Ontology& o) { return to_json(o).dump(); });

  m.def(
      "load_ontology",
      [](const std::string& path) { return std::make_shared<Ontology>(*load_shared_ontology(path)); },
      py::arg("path") = "");

  m.def(
      "accept",
      [](const Scores& scores, const std::string& target, int k, const std::vector<std::string>& taboo) {
        const auto d = accept(make_scoreset(scores, target, k), taboo);
        return py::make_tuple(d.is_accepted(), d.reason);
      },
      py::arg("scores"), py::arg("target"), py::arg("k"), py::arg("taboo"));
  m.def(
      "rank_of",
      [](const Scores& scores, const std::string& label) { return rank_of(make_scoreset(scores, label, 1), label); },
      py::arg("scores"), py::arg("label"));
  m.def("ranked_labels", &ranked_labels, py::arg("scores"));

  m.def(
      "irv_scores",
      [](const std::vector<double>& image, const std::vector<std::vector<double>>& regions) {
        return irv_scores(EmbeddingVector(image), to_embeddings(regions));
      },
      py::arg("image"), py::arg("regions"));
  m.def(
      "rrv_scores", [](const std::vector<std::vector<double>>& regions) { return rrv_scores(to_embeddings(regions)); },
      py::arg("regions"));
  m.def(
      "kb_scores",
      [](const std::vector<std::vector<double>>& regions, const std::map<std::string, std::vector<double>>& classes,
         const std::map<std::string, std::string>& kb, int k_kb, const py::function& embed_text) {
        LabelEmbeddings class_embs;
        for (const auto& [label, v] : classes) class_embs.emplace(label, EmbeddingVector(v));
        const KnowledgeBase knowledge(kb.begin(), kb.end());
        const TextEmbedder embed = [&](std::string_view text) {
          return EmbeddingVector(embed_text(std::string(text)).cast<std::vector<double>>());
        };
        return kb_scores(to_embeddings(regions), class_embs, knowledge, k_kb, embed);
      },
      py::arg("regions"), py::arg("classes"), py::arg("kb"), py::arg("k_kb"), py::arg("embed_text"));
  m.def(
      "combine",
      [](std::optional<std::vector<double>> irv, std::optional<std::vector<double>> rrv,
         std::optional<std::vector<double>> kb, const std::string& function_set) {
        return combine({std::move(irv), std::move(rrv), std::move(kb)}, parse_function_set(function_set));
      },
      py::arg("irv") = py::none(), py::arg("rrv") = py::none(), py::arg("kb") = py::none(),
      py::arg("function_set") = "all");

  m.def("word_match", &word_match, py::arg("response"), py::arg("truth"));
  m.def("build_prompt", &build_prompt, py::arg("override") = py::none());
  m.attr("DEFAULT_VQA_PROMPT") = std::string(kDefaultVqaPrompt);

  m.def(
      "manifest_stats",
      [](const fs::path& path) {
        const auto s = manifest_stats(path);
        py::dict d;
        d["generated"] = s.generated;
        d["accepted"] = s.accepted;
        d["rejected"] = s.rejected;
        d["pending"] = s.pending;
        d["acceptance_rate"] = s.acceptance_rate();
        return d;
      },
      py::arg("path"));
  m.def(
      "format_stats",
      [](const fs::path& path) {
        std::ostringstream out;
        print_stats(manifest_stats(path), out);
        return out.str();
      },
      py::arg("path"));

  // Stage runners. `config_json` is a pipeline config document; empty means defaults.
  m.def(
      "make_fixtures",
      [](const fs::path& out, int images_per_scene, int masks_per_image, const std::string& config_json) {
        const auto config = parse_config(config_json);
        const auto ontology = load_shared_ontology(config.ontology);
        const MockSemanticSpace space(*ontology, config.mock_settings());
        FixtureOptions options;
        options.images_per_scene = images_per_scene;
        options.masks_per_image = masks_per_image;
        options.seed = config.seed;
        const auto set = write_fixture_set(*ontology, space, out, options);
        return py::make_tuple(set.images.images.size(), set.masks.size());
      },
      py::arg("out"), py::arg("images_per_scene") = 2, py::arg("masks_per_image") = 3, py::arg("config_json") = "");
  m.def(
      "run_gen",
      [](const fs::path& images, const fs::path& masks, const fs::path& out, const std::string& config_json) {
        py::gil_scoped_release release;
        const auto s = run_gen(make_factory(config_json), {images, masks, out});
        return std::make_pair(s.tasks, s.candidates);
      },
      py::arg("images"), py::arg("masks"), py::arg("out"), py::arg("config_json") = "");
  m.def(
      "run_filter",
      [](const fs::path& dataset, const std::string& config_json) {
        py::gil_scoped_release release;
        const auto s = run_filter(make_factory(config_json), dataset);
        return std::make_tuple(s.total, s.accepted, s.decided);
      },
      py::arg("dataset"), py::arg("config_json") = "");
  m.def(
      "run_detect",
      [](const fs::path& dataset, const fs::path& out, const std::string& config_json) {
        py::gil_scoped_release release;
        return run_detect(make_factory(config_json), dataset, out);
      },
      py::arg("dataset"), py::arg("out"), py::arg("config_json") = "");
  m.def(
      "run_eval",
      [](const fs::path& dataset, const fs::path& out, const std::string& config_json,
         const std::optional<fs::path>& detections) {
        std::string report;
        {
          py::gil_scoped_release release;
          report = to_json(run_eval(make_factory(config_json), dataset, out, detections)).dump();
        }
        return report;
      },
      py::arg("dataset"), py::arg("out"), py::arg("config_json") = "", py::arg("detections") = py::none());
}
