#include "anomforge/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "anomforge/error.hpp"

namespace anomforge {

using nlohmann::json;

std::string_view to_string(SizeClass size) {
  switch (size) {
    case SizeClass::Small: return "small";
    case SizeClass::Medium: return "medium";
    case SizeClass::Large: return "large";
  }
  return "small";
}

SizeClass parse_size_class(std::string_view text) {
  if (text == "small") return SizeClass::Small;
  if (text == "medium") return SizeClass::Medium;
  if (text == "large") return SizeClass::Large;
  throw validation_error(fmt::format("size_class must be one of small|medium|large, got '{}'", text));
}

std::vector<DescribedLabel> default_broad_categories() {
  return {
      {"animal", "a living creature such as a mammal, reptile, fish or bird"},
      {"food", "something people eat or drink, such as fruit, meals and snacks"},
      {"tool", "a handheld or powered implement used to cut, build or repair things"},
      {"musical instrument", "a device played to produce music, such as strings, drums or horns"},
      {"vehicle/outdoor equipment",
       "transport, street fixtures and gear normally used outdoors or on the water"},
      {"appliance", "an electrical household or office machine that performs a chore"},
      {"medical item", "equipment or supplies used by doctors and nurses to treat patients"},
      {"child's toy", "a plaything for children, such as a doll or a snowman"},
      {"sports equipment", "gear used to play a sport or to exercise"},
      {"household item", "an everyday object used around the home for cooking, cleaning or hygiene"},
  };
}

std::vector<DescribedLabel> default_taboo() {
  return {
      {"person", "a human being, a man, woman or child"},
      {"human face", "the front of a human head with eyes, nose and mouth"},
      {"human arm", "the human upper limb between the shoulder and the hand"},
      {"human leg", "the human lower limb that a person stands and walks on"},
      {"human hand", "the end of a human arm with a palm and five fingers"},
  };
}

Ontology::Ontology(std::vector<ObjectClass> objects, std::vector<SceneType> scenes,
                   std::vector<DescribedLabel> taboo, std::vector<DescribedLabel> broad_categories)
    : objects_(std::move(objects)),
      scenes_(std::move(scenes)),
      taboo_(std::move(taboo)),
      broad_categories_(std::move(broad_categories)) {
  validate();
}

void Ontology::validate() const {
  if (objects_.empty()) throw validation_error("ontology: objects must be non-empty");

  std::set<std::string, std::less<>> labels;
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const auto& obj = objects_[i];
    if (obj.label.empty()) throw validation_error(fmt::format("ontology: objects[{}].label is empty", i));
    if (!labels.insert(obj.label).second)
      throw validation_error(fmt::format("ontology: duplicate object label '{}'", obj.label));
    if (obj.description.empty())
      throw validation_error(fmt::format("ontology: object '{}' has an empty description", obj.label));
  }

  if (broad_categories_.size() != kBroadCategoryCount)
    throw validation_error(fmt::format("ontology: broad_categories must have exactly {} entries, got {}",
                                       kBroadCategoryCount, broad_categories_.size()));
  std::set<std::string, std::less<>> categories;
  for (const auto& cat : broad_categories_) {
    if (cat.label.empty()) throw validation_error("ontology: broad category with empty label");
    if (!categories.insert(cat.label).second)
      throw validation_error(fmt::format("ontology: duplicate broad category '{}'", cat.label));
  }
  for (const auto& obj : objects_) {
    if (!categories.contains(obj.broad_category))
      throw validation_error(fmt::format("ontology: object '{}' has unknown broad_category '{}'",
                                         obj.label, obj.broad_category));
  }

  if (scenes_.empty()) throw validation_error("ontology: scenes must be non-empty");
  std::set<std::string, std::less<>> scene_names;
  for (const auto& scene : scenes_) {
    if (scene.name.empty()) throw validation_error("ontology: scene with empty name");
    if (!scene_names.insert(scene.name).second)
      throw validation_error(fmt::format("ontology: duplicate scene '{}'", scene.name));
    if (scene.anomalous_objects.empty())
      throw validation_error(fmt::format("ontology: scene '{}' has no anomalous objects", scene.name));
    for (const auto& label : scene.anomalous_objects) {
      if (!labels.contains(label))
        throw validation_error(
            fmt::format("ontology: scene '{}' lists unknown object '{}'", scene.name, label));
    }
  }

  std::set<std::string, std::less<>> taboo_labels;
  for (const auto& t : taboo_) {
    if (t.label.empty()) throw validation_error("ontology: taboo entry with empty label");
    if (!taboo_labels.insert(t.label).second)
      throw validation_error(fmt::format("ontology: duplicate taboo label '{}'", t.label));
    if (labels.contains(t.label))
      throw validation_error(
          fmt::format("ontology: taboo label '{}' is also an anomaly target", t.label));
  }
}

const ObjectClass* Ontology::find_object(std::string_view label) const {
  auto it = std::find_if(objects_.begin(), objects_.end(),
                         [&](const ObjectClass& o) { return o.label == label; });
  return it == objects_.end() ? nullptr : &*it;
}

const SceneType* Ontology::find_scene(std::string_view name) const {
  auto it = std::find_if(scenes_.begin(), scenes_.end(),
                         [&](const SceneType& s) { return s.name == name; });
  return it == scenes_.end() ? nullptr : &*it;
}

const DescribedLabel* Ontology::find_taboo(std::string_view label) const {
  auto it = std::find_if(taboo_.begin(), taboo_.end(),
                         [&](const DescribedLabel& t) { return t.label == label; });
  return it == taboo_.end() ? nullptr : &*it;
}

const DescribedLabel* Ontology::find_category(std::string_view label) const {
  auto it = std::find_if(broad_categories_.begin(), broad_categories_.end(),
                         [&](const DescribedLabel& c) { return c.label == label; });
  return it == broad_categories_.end() ? nullptr : &*it;
}

const ObjectClass& Ontology::object(std::string_view label) const {
  if (const auto* obj = find_object(label)) return *obj;
  throw validation_error(fmt::format("unknown object label '{}'", label));
}

const SceneType& Ontology::scene(std::string_view name) const {
  if (const auto* s = find_scene(name)) return *s;
  throw validation_error(fmt::format("unknown scene '{}'", name));
}

bool Ontology::is_anomalous(std::string_view scene_name, std::string_view label) const {
  const auto& s = scene(scene_name);
  return std::find(s.anomalous_objects.begin(), s.anomalous_objects.end(), label) !=
         s.anomalous_objects.end();
}

std::vector<std::string> Ontology::object_labels() const {
  std::vector<std::string> out;
  out.reserve(objects_.size());
  for (const auto& o : objects_) out.push_back(o.label);
  return out;
}

std::vector<std::string> Ontology::taboo_labels() const {
  std::vector<std::string> out;
  out.reserve(taboo_.size());
  for (const auto& t : taboo_) out.push_back(t.label);
  return out;
}

std::string Ontology::describe_label(std::string_view label) const {
  const std::string* description = nullptr;
  if (const auto* o = find_object(label)) description = &o->description;
  else if (const auto* t = find_taboo(label)) description = &t->description;
  else if (const auto* c = find_category(label)) description = &c->description;
  else throw validation_error(fmt::format("unknown label '{}'", label));
  if (description->empty()) return std::string(label);
  return fmt::format("{}: {}", label, *description);
}

namespace {

std::vector<DescribedLabel> described_labels_from_json(const json& arr, std::string_view field) {
  if (!arr.is_array()) throw parse_error(fmt::format("ontology: '{}' must be an array", field));
  std::vector<DescribedLabel> out;
  for (const auto& entry : arr) {
    if (entry.is_string()) {
      out.push_back({entry.get<std::string>(), ""});
    } else if (entry.is_object()) {
      out.push_back({entry.at("label").get<std::string>(), entry.value("description", std::string{})});
    } else {
      throw parse_error(fmt::format("ontology: '{}' entries must be strings or objects", field));
    }
  }
  return out;
}

json described_labels_to_json(const std::vector<DescribedLabel>& labels) {
  json arr = json::array();
  for (const auto& l : labels) {
    if (l.description.empty()) arr.push_back(l.label);
    else arr.push_back({{"label", l.label}, {"description", l.description}});
  }
  return arr;
}

}  // namespace

Ontology ontology_from_json(const json& doc) {
  try {
    if (!doc.is_object()) throw parse_error("ontology: document must be a JSON object");
    std::vector<ObjectClass> objects;
    for (const auto& o : doc.at("objects")) {
      objects.push_back({o.at("label").get<std::string>(), o.at("description").get<std::string>(),
                         parse_size_class(o.at("size_class").get<std::string>()),
                         o.at("broad_category").get<std::string>()});
    }
    std::vector<SceneType> scenes;
    for (const auto& s : doc.at("scenes")) {
      scenes.push_back({s.at("name").get<std::string>(),
                        s.at("anomalous_objects").get<std::vector<std::string>>()});
    }
    auto taboo = doc.contains("taboo") ? described_labels_from_json(doc.at("taboo"), "taboo")
                                       : default_taboo();
    auto categories = doc.contains("broad_categories")
                          ? described_labels_from_json(doc.at("broad_categories"), "broad_categories")
                          : default_broad_categories();
    return Ontology(std::move(objects), std::move(scenes), std::move(taboo), std::move(categories));
  } catch (const json::exception& e) {
    throw parse_error(fmt::format("ontology: {}", e.what()));
  }
}

json to_json(const Ontology& ontology) {
  json objects = json::array();
  for (const auto& o : ontology.objects()) {
    objects.push_back({{"label", o.label},
                       {"description", o.description},
                       {"size_class", to_string(o.size_class)},
                       {"broad_category", o.broad_category}});
  }
  json scenes = json::array();
  for (const auto& s : ontology.scenes()) {
    scenes.push_back({{"name", s.name}, {"anomalous_objects", s.anomalous_objects}});
  }
  return {{"objects", objects},
          {"scenes", scenes},
          {"taboo", described_labels_to_json(ontology.taboo())},
          {"broad_categories", described_labels_to_json(ontology.broad_categories())}};
}

Ontology load_ontology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error(fmt::format("cannot open ontology file '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw parse_error(fmt::format("ontology '{}': {}", path.string(), e.what()));
  }
  try {
    return ontology_from_json(doc);
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("{} ({})", e.what(), path.string()));
  }
}

void save_ontology(const Ontology& ontology, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error(fmt::format("cannot write ontology file '{}'", path.string()));
  out << to_json(ontology).dump(2) << '\n';
  if (!out) throw io_error(fmt::format("failed writing ontology file '{}'", path.string()));
}

std::vector<ObjectClass> anomalous_objects_for(const Ontology& ontology, std::string_view scene,
                                               SizeClass size) {
  const auto& s = ontology.scene(scene);
  std::vector<ObjectClass> out;
  for (const auto& label : s.anomalous_objects) {
    const auto& obj = ontology.object(label);
    if (obj.size_class == size) out.push_back(obj);
  }
  std::sort(out.begin(), out.end(),
            [](const ObjectClass& a, const ObjectClass& b) { return a.label < b.label; });
  return out;
}

const std::string& description_of(const Ontology& ontology, std::string_view label) {
  if (const auto* o = ontology.find_object(label)) return o->description;
  if (const auto* t = ontology.find_taboo(label)) return t->description;
  if (const auto* c = ontology.find_category(label)) return c->description;
  throw validation_error(fmt::format("unknown label '{}'", label));
}

}  // namespace anomforge
