#pragma once

// Curated exploratory testing knowledge: black-box criteria, ET tours and
// mobile app guidelines. Backs ?help and the random active suggestions.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace explorebot {

enum class KnowledgeGroup { criteria, tours, mobile_guidelines };

inline constexpr KnowledgeGroup kAllGroups[] = {KnowledgeGroup::criteria, KnowledgeGroup::tours,
                                                KnowledgeGroup::mobile_guidelines};

/// Key used in catalog files and in "?help <group>": criteria, tours, mobile.
std::string_view group_key(KnowledgeGroup group) noexcept;
std::string_view group_heading(KnowledgeGroup group) noexcept;
std::optional<KnowledgeGroup> group_from_key(std::string_view key) noexcept;

struct KnowledgeItem {
  std::string id;  // stable slug, e.g. "bad-neighborhood-tour"
  KnowledgeGroup group = KnowledgeGroup::criteria;
  std::string title;
  std::string body;
  std::vector<std::string> follow_up_questions;

  friend bool operator==(const KnowledgeItem&, const KnowledgeItem&) = default;
};

class CatalogError : public std::runtime_error {
 public:
  enum class Code { unreadable, malformed, missing_field, duplicate_slug, unknown_group, empty_title, empty_body };

  CatalogError(Code code, std::string entry, const std::string& message)
      : std::runtime_error(message), code_(code), entry_(std::move(entry)) {}

  Code code() const noexcept { return code_; }
  /// Slug (or position) of the offending entry; empty for file-level errors.
  const std::string& entry() const noexcept { return entry_; }

 private:
  Code code_;
  std::string entry_;
};

std::string_view to_string(CatalogError::Code code) noexcept;

/// Immutable validated catalog. Item order is the file order.
class Catalog {
 public:
  Catalog() = default;
  /// Throws CatalogError on duplicate slugs or empty fields.
  Catalog(std::string version, std::vector<KnowledgeItem> items);

  const std::string& version() const noexcept { return version_; }
  const std::vector<KnowledgeItem>& items() const noexcept { return items_; }
  bool empty() const noexcept { return items_.empty(); }
  std::size_t size() const noexcept { return items_.size(); }
  const KnowledgeItem* find(std::string_view id) const noexcept;

 private:
  std::string version_;
  std::vector<KnowledgeItem> items_;
};

Catalog parse_catalog(std::string_view json_text);
Catalog load_catalog(const std::filesystem::path& path);

/// All items grouped under the three group headings, each with its key.
std::string list_topics(const Catalog& catalog);
/// Items of one group only.
std::string list_group(const Catalog& catalog, KnowledgeGroup group);

struct LookupMiss {
  std::string key;
  std::vector<std::string> nearest;
};

using LookupResult = std::variant<const KnowledgeItem*, LookupMiss>;

/// Exact slug match first, then case-insensitive title match. A miss carries
/// the keys sharing the longest prefix with the request.
LookupResult lookup(const Catalog& catalog, std::string_view key);

/// Body followed by the follow-up questions, if any.
std::string render_item(const KnowledgeItem& item);

}  // namespace explorebot
