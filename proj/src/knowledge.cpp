#include "explorebot/knowledge.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "explorebot/text.hpp"

namespace explorebot {

using nlohmann::json;

std::string_view group_key(KnowledgeGroup group) noexcept {
  switch (group) {
    case KnowledgeGroup::criteria: return "criteria";
    case KnowledgeGroup::tours: return "tours";
    case KnowledgeGroup::mobile_guidelines: return "mobile";
  }
  return "";
}

std::string_view group_heading(KnowledgeGroup group) noexcept {
  switch (group) {
    case KnowledgeGroup::criteria: return "Black-box test criteria";
    case KnowledgeGroup::tours: return "Exploratory testing tours";
    case KnowledgeGroup::mobile_guidelines: return "Mobile app testing guidelines";
  }
  return "";
}

std::optional<KnowledgeGroup> group_from_key(std::string_view key) noexcept {
  for (KnowledgeGroup g : kAllGroups) {
    if (text::iequals(key, group_key(g))) return g;
  }
  return std::nullopt;
}

std::string_view to_string(CatalogError::Code code) noexcept {
  using C = CatalogError::Code;
  switch (code) {
    case C::unreadable: return "unreadable";
    case C::malformed: return "malformed";
    case C::missing_field: return "missing-field";
    case C::duplicate_slug: return "duplicate-slug";
    case C::unknown_group: return "unknown-group";
    case C::empty_title: return "empty-title";
    case C::empty_body: return "empty-body";
  }
  return "";
}

Catalog::Catalog(std::string version, std::vector<KnowledgeItem> items)
    : version_(std::move(version)), items_(std::move(items)) {
  std::set<std::string> seen;
  for (const auto& item : items_) {
    if (text::trim(item.id).empty()) {
      throw CatalogError(CatalogError::Code::missing_field, "", "catalog entry with empty id");
    }
    if (!seen.insert(item.id).second) {
      throw CatalogError(CatalogError::Code::duplicate_slug, item.id, "duplicate slug '" + item.id + "'");
    }
    if (text::trim(item.title).empty()) {
      throw CatalogError(CatalogError::Code::empty_title, item.id, "entry '" + item.id + "' has an empty title");
    }
    if (text::trim(item.body).empty()) {
      throw CatalogError(CatalogError::Code::empty_body, item.id, "entry '" + item.id + "' has an empty body");
    }
  }
}

const KnowledgeItem* Catalog::find(std::string_view id) const noexcept {
  auto it = std::find_if(items_.begin(), items_.end(), [&](const auto& item) { return item.id == id; });
  return it == items_.end() ? nullptr : &*it;
}

namespace {

std::string entry_name(const json& entry, std::size_t index) {
  if (entry.is_object() && entry.contains("id") && entry["id"].is_string()) {
    return entry["id"].get<std::string>();
  }
  return "#" + std::to_string(index);
}

std::string required_string(const json& entry, const char* field, const std::string& name) {
  if (!entry.contains(field) || !entry[field].is_string()) {
    throw CatalogError(CatalogError::Code::missing_field, name,
                       "entry '" + name + "' is missing string field '" + field + "'");
  }
  return entry[field].get<std::string>();
}

}  // namespace

Catalog parse_catalog(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw CatalogError(CatalogError::Code::malformed, "", std::string("catalog is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("items") || !doc["items"].is_array()) {
    throw CatalogError(CatalogError::Code::malformed, "", "catalog must be an object with an 'items' array");
  }
  std::string version = doc.value("version", std::string{});
  if (version.empty()) {
    throw CatalogError(CatalogError::Code::missing_field, "", "catalog is missing its 'version'");
  }

  std::vector<KnowledgeItem> items;
  std::size_t index = 0;
  for (const auto& entry : doc["items"]) {
    const std::string name = entry_name(entry, index++);
    if (!entry.is_object()) {
      throw CatalogError(CatalogError::Code::malformed, name, "entry " + name + " is not an object");
    }
    KnowledgeItem item;
    item.id = required_string(entry, "id", name);
    const std::string group = required_string(entry, "group", name);
    const auto parsed_group = group_from_key(group);
    if (!parsed_group) {
      throw CatalogError(CatalogError::Code::unknown_group, name,
                         "entry '" + name + "' has unknown group '" + group + "' (expected criteria, tours or mobile)");
    }
    item.group = *parsed_group;
    item.title = required_string(entry, "title", name);
    item.body = required_string(entry, "body", name);
    if (entry.contains("questions")) {
      if (!entry["questions"].is_array()) {
        throw CatalogError(CatalogError::Code::malformed, name, "entry '" + name + "': 'questions' must be an array");
      }
      for (const auto& q : entry["questions"]) {
        if (!q.is_string()) {
          throw CatalogError(CatalogError::Code::malformed, name, "entry '" + name + "': questions must be strings");
        }
        item.follow_up_questions.push_back(q.get<std::string>());
      }
    }
    items.push_back(std::move(item));
  }
  return Catalog(std::move(version), std::move(items));
}

Catalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw CatalogError(CatalogError::Code::unreadable, "", "cannot read catalog '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_catalog(buffer.str());
}

std::string list_group(const Catalog& catalog, KnowledgeGroup group) {
  std::string out = "[";
  out += group_key(group);
  out += "] ";
  out += group_heading(group);
  for (const auto& item : catalog.items()) {
    if (item.group != group) continue;
    out += "\n  " + item.id + " - " + item.title;
  }
  return out;
}

std::string list_topics(const Catalog& catalog) {
  std::string out = "Exploratory testing knowledge (catalog " + catalog.version() + "):";
  for (KnowledgeGroup g : kAllGroups) {
    out += '\n';
    out += list_group(catalog, g);
  }
  return out;
}

LookupResult lookup(const Catalog& catalog, std::string_view raw_key) {
  const std::string_view key = text::trim(raw_key);
  if (const auto* item = catalog.find(key)) return item;
  for (const auto& item : catalog.items()) {
    if (text::iequals(item.title, key)) return &item;
  }

  LookupMiss miss{std::string(key), {}};
  const std::string lowered = text::to_lower(key);
  std::size_t best = 0;
  for (const auto& item : catalog.items()) {
    const auto mismatch = std::mismatch(lowered.begin(), lowered.end(), item.id.begin(), item.id.end());
    const auto common = static_cast<std::size_t>(mismatch.first - lowered.begin());
    if (common == 0 || common < best) continue;
    if (common > best) {
      best = common;
      miss.nearest.clear();
    }
    miss.nearest.push_back(item.id);
  }
  return miss;
}

std::string render_item(const KnowledgeItem& item) {
  std::string out = item.title + "\n" + item.body;
  if (!item.follow_up_questions.empty()) {
    out += "\nAsk yourself:";
    for (const auto& q : item.follow_up_questions) out += "\n- " + q;
  }
  return out;
}

}  // namespace explorebot
