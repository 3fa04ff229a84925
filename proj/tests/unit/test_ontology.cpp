#include <doctest.h>

#include <algorithm>

#include "anomforge/ontology.hpp"
#include "test_support.hpp"

using namespace anomforge;

namespace {

nlohmann::json small_doc() {
  return nlohmann::json::parse(R"({
    "objects": [
      {"label": "apple", "description": "a red fruit", "size_class": "small", "broad_category": "food"},
      {"label": "cow", "description": "a farm animal", "size_class": "large", "broad_category": "animal"}
    ],
    "scenes": [{"name": "bathroom", "anomalous_objects": ["apple", "cow"]}]
  })");
}

}  // namespace

TEST_CASE("bundled ontology has the printed table's shape") {
  const auto& o = *testing::bundled_ontology();
  CHECK(o.scenes().size() == 8);
  CHECK(o.objects().size() == 48);
  CHECK(o.broad_categories().size() == kBroadCategoryCount);
  CHECK(o.taboo_labels() == std::vector<std::string>{"person", "human face", "human arm", "human leg", "human hand"});
}

TEST_CASE("anomalous_objects_for follows the matrix") {
  const auto& o = *testing::bundled_ontology();
  for (auto size : {SizeClass::Small, SizeClass::Medium, SizeClass::Large}) {
    const auto kitchen = anomalous_objects_for(o, "kitchen", size);
    CHECK(std::none_of(kitchen.begin(), kitchen.end(), [](const ObjectClass& c) { return c.label == "spoon"; }));
  }
  const auto bathroom = anomalous_objects_for(o, "bathroom", o.object("apple").size_class);
  CHECK(std::any_of(bathroom.begin(), bathroom.end(), [](const ObjectClass& c) { return c.label == "apple"; }));
  CHECK_THROWS_AS(anomalous_objects_for(o, "garage", SizeClass::Small), Error);
}

TEST_CASE("anomalous_objects_for is a subset of the size class") {
  const auto& o = *testing::bundled_ontology();
  for (const auto& scene : o.scenes())
    for (auto size : {SizeClass::Small, SizeClass::Medium, SizeClass::Large})
      for (const auto& obj : anomalous_objects_for(o, scene.name, size)) {
        CHECK(obj.size_class == size);
        CHECK(o.is_anomalous(scene.name, obj.label));
      }
}

TEST_CASE("size filter with no members yields an empty list") {
  const auto o = ontology_from_json(small_doc());
  CHECK(anomalous_objects_for(o, "bathroom", SizeClass::Medium).empty());
  CHECK(anomalous_objects_for(o, "bathroom", SizeClass::Small).size() == 1);
}

TEST_CASE("small documents fall back to default taboo and categories") {
  const auto o = ontology_from_json(small_doc());
  CHECK(o.taboo() == default_taboo());
  CHECK(o.broad_categories() == default_broad_categories());
}

TEST_CASE("ontology validation errors") {
  SUBCASE("empty object list") {
    auto doc = small_doc();
    doc["objects"] = nlohmann::json::array();
    doc["scenes"] = nlohmann::json::array();
    CHECK_THROWS_WITH_AS(ontology_from_json(doc), doctest::Contains("objects must be non-empty"), Error);
  }
  SUBCASE("taboo overlapping an anomaly target") {
    auto doc = small_doc();
    doc["taboo"] = {"person", "apple"};
    CHECK_THROWS_WITH_AS(ontology_from_json(doc), doctest::Contains("also an anomaly target"), Error);
  }
  SUBCASE("scene referencing an unknown object") {
    auto doc = small_doc();
    doc["scenes"][0]["anomalous_objects"].push_back("zebra");
    CHECK_THROWS_WITH_AS(ontology_from_json(doc), doctest::Contains("unknown object 'zebra'"), Error);
  }
  SUBCASE("scene without anomalies") {
    auto doc = small_doc();
    doc["scenes"][0]["anomalous_objects"] = nlohmann::json::array();
    CHECK_THROWS_AS(ontology_from_json(doc), Error);
  }
  SUBCASE("bad size class") {
    auto doc = small_doc();
    doc["objects"][0]["size_class"] = "huge";
    CHECK_THROWS_AS(ontology_from_json(doc), Error);
  }
  SUBCASE("duplicate label") {
    auto doc = small_doc();
    doc["objects"][1]["label"] = "apple";
    CHECK_THROWS_WITH_AS(ontology_from_json(doc), doctest::Contains("duplicate object"), Error);
  }
  SUBCASE("empty description") {
    auto doc = small_doc();
    doc["objects"][0]["description"] = "";
    CHECK_THROWS_AS(ontology_from_json(doc), Error);
  }
  SUBCASE("unknown broad category") {
    auto doc = small_doc();
    doc["objects"][0]["broad_category"] = "mineral";
    CHECK_THROWS_WITH_AS(ontology_from_json(doc), doctest::Contains("unknown broad_category"), Error);
  }
  SUBCASE("nine categories") {
    auto doc = small_doc();
    auto cats = nlohmann::json::array();
    for (const auto& c : default_broad_categories()) cats.push_back(c.label);
    cats.erase(cats.end() - 1);
    doc["broad_categories"] = cats;
    for (auto& obj : doc["objects"]) obj["broad_category"] = "food";
    CHECK_THROWS_WITH_AS(ontology_from_json(doc), doctest::Contains("exactly 10"), Error);
  }
}

TEST_CASE("malformed ontology files are parse errors") {
  testing::TempDir dir;
  {
    std::ofstream(dir / "bad.json") << "{not json";
  }
  try {
    load_ontology(dir / "bad.json");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Parse);
  }
  try {
    load_ontology(dir / "missing.json");
    FAIL("expected io error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Io);
  }
}

TEST_CASE("description_of returns stored text verbatim") {
  const auto& o = *testing::bundled_ontology();
  CHECK(description_of(o, "apple") == o.object("apple").description);
  CHECK(description_of(o, "person") == o.find_taboo("person")->description);
  CHECK_THROWS_AS(description_of(o, "unicorn"), Error);

  auto doc = small_doc();
  doc["objects"][0]["description"] = "apple: a red fruit ...";
  CHECK(description_of(ontology_from_json(doc), "apple") == "apple: a red fruit ...");
}

TEST_CASE("describe_label joins label and description") {
  const auto o = ontology_from_json(small_doc());
  CHECK(o.describe_label("apple") == "apple: a red fruit");
}

TEST_CASE("load is pure and serialization round-trips") {
  testing::TempDir dir;
  const auto path = std::filesystem::path(ANOMFORGE_DEFAULT_ONTOLOGY);
  const auto a = load_ontology(path);
  const auto b = load_ontology(path);
  CHECK(a == b);
  save_ontology(a, dir / "copy.json");
  CHECK(load_ontology(dir / "copy.json") == a);
  CHECK(ontology_from_json(to_json(a)) == a);
}
