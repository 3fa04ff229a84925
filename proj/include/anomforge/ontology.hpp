#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace anomforge {

enum class SizeClass { Small, Medium, Large };

std::string_view to_string(SizeClass size);
SizeClass parse_size_class(std::string_view text);

struct ObjectClass {
  std::string label;
  std::string description;
  SizeClass size_class = SizeClass::Small;
  std::string broad_category;

  bool operator==(const ObjectClass&) const = default;
};

struct SceneType {
  std::string name;
  std::vector<std::string> anomalous_objects;

  bool operator==(const SceneType&) const = default;
};

// A label that carries its own description text: taboo entries and broad
// categories both have this shape.
struct DescribedLabel {
  std::string label;
  std::string description;

  bool operator==(const DescribedLabel&) const = default;
};

inline constexpr std::size_t kBroadCategoryCount = 10;

// Immutable after construction; validate() runs in the constructor.
class Ontology {
 public:
  Ontology(std::vector<ObjectClass> objects, std::vector<SceneType> scenes,
           std::vector<DescribedLabel> taboo, std::vector<DescribedLabel> broad_categories);

  const std::vector<ObjectClass>& objects() const { return objects_; }
  const std::vector<SceneType>& scenes() const { return scenes_; }
  const std::vector<DescribedLabel>& taboo() const { return taboo_; }
  const std::vector<DescribedLabel>& broad_categories() const { return broad_categories_; }

  const ObjectClass* find_object(std::string_view label) const;
  const SceneType* find_scene(std::string_view name) const;
  const DescribedLabel* find_taboo(std::string_view label) const;
  const DescribedLabel* find_category(std::string_view label) const;

  const ObjectClass& object(std::string_view label) const;
  const SceneType& scene(std::string_view name) const;

  bool is_anomalous(std::string_view scene, std::string_view label) const;

  std::vector<std::string> object_labels() const;
  std::vector<std::string> taboo_labels() const;

  // The "label: description" form used for text embeddings across the
  // filter, detector and evaluation metrics.
  std::string describe_label(std::string_view label) const;

  bool operator==(const Ontology&) const = default;

 private:
  void validate() const;

  std::vector<ObjectClass> objects_;
  std::vector<SceneType> scenes_;
  std::vector<DescribedLabel> taboo_;
  std::vector<DescribedLabel> broad_categories_;
};

Ontology ontology_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Ontology& ontology);

Ontology load_ontology(const std::filesystem::path& path);
void save_ontology(const Ontology& ontology, const std::filesystem::path& path);

// Sorted by label.
std::vector<ObjectClass> anomalous_objects_for(const Ontology& ontology, std::string_view scene,
                                               SizeClass size);

const std::string& description_of(const Ontology& ontology, std::string_view label);

std::vector<DescribedLabel> default_broad_categories();
std::vector<DescribedLabel> default_taboo();

}  // namespace anomforge
