#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "sitelens/telemetry.h"

namespace sitelens {

inline constexpr size_t kCatalogSize = 187;

enum class FeatureSource { kDns, kIp, kDom, kHttp, kHtml, kTraffic, kCookie, kRedirect };

std::string_view FeatureSourceName(FeatureSource source);
std::optional<FeatureSource> ParseFeatureSource(std::string_view name);

// The 35 features of the shipped default selection. Eight of them (the DNS
// and IP history ones) cannot be observed during a live page visit.
inline constexpr std::array<std::string_view, 35> kDefaultTopFeatures = {
    "domain_birth", "domain_age_days", "domainLookupStart", "domainLookupEnd",
    "IP_change_after_max", "IP_age_days", "total_coownedSites",
    "numOfsites_coowned_analytics",
    "domLoading", "domContentLoadedEventStart", "domContentLoadedEventEnd",
    "domComplete", "domInteractive",
    "connectStart", "connectEnd", "responseStart", "responseEnd",
    "requestStart", "fetchStart", "secureConnectionStart", "loadEventEnd",
    "loadEventStart",
    "LayoutObjects", "Nodes", "JSHeapUsedSize", "JSHeapTotalSize",
    "FirstMeaningfulPaint", "HTML_classes", "page_size", "image_size",
    "css_size", "text_size", "js_size", "audio_size", "video_size"};

struct FeatureSpec {
  std::string name;
  FeatureSource source = FeatureSource::kHtml;
  bool realtime_available = true;

  bool operator==(const FeatureSpec&) const = default;
};

// Ordered, fixed list of extracted features. Every name must be one the
// extractor knows how to compute.
class FeatureCatalog {
 public:
  // The catalog compiled into the extractor; identical to the shipped
  // data/feature_catalog.tsv.
  static const FeatureCatalog& Default();
  // Lines of "name<TAB>source<TAB>realtime{0|1}". Throws DataError or
  // InvariantError.
  static FeatureCatalog Parse(std::istream& in);
  static FeatureCatalog Load(const std::filesystem::path& path);

  std::string Serialize() const;
  // Hex SHA-256 of Serialize().
  std::string Hash() const;

  size_t size() const { return entries_.size(); }
  const std::vector<FeatureSpec>& entries() const { return entries_; }
  const FeatureSpec& at(size_t index) const { return entries_.at(index); }
  std::optional<size_t> IndexOf(std::string_view name) const;
  std::vector<std::string> Names() const;

  bool operator==(const FeatureCatalog& other) const {
    return entries_ == other.entries_;
  }

 private:
  explicit FeatureCatalog(std::vector<FeatureSpec> entries);

  std::vector<FeatureSpec> entries_;
  std::unordered_map<std::string, size_t> index_;
  // Extractor slot per entry, resolved once at construction.
  std::vector<size_t> slots_;

  friend struct FeatureExtractorAccess;
};

// Host-suffix to tracker-category map; longest suffix wins.
class CategoryList {
 public:
  static const CategoryList& Default();
  static CategoryList Parse(std::istream& in);
  static CategoryList Load(const std::filesystem::path& path);

  explicit CategoryList(std::vector<std::pair<std::string, TrackerCategory>> entries);

  std::optional<TrackerCategory> Match(std::string_view host) const;
  std::string Serialize() const;
  const std::vector<std::pair<std::string, TrackerCategory>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, TrackerCategory>> entries_;
  std::unordered_map<std::string, TrackerCategory> by_suffix_;
};

using FeatureValue = std::optional<double>;

struct FeatureVector {
  std::string domain;
  std::optional<SiteLabel> label;
  std::vector<FeatureValue> values;

  bool operator==(const FeatureVector&) const = default;
};

struct FeatureMatrix {
  FeatureCatalog catalog = FeatureCatalog::Default();
  std::vector<FeatureVector> rows;

  // Hex SHA-256 over the canonical JSON form.
  std::string Hash() const;
};

struct TrafficCounts {
  std::array<int64_t, kTrackerCategoryCount> tracked{};
  int64_t none = 0;

  int64_t Get(TrackerCategory category) const {
    return tracked[static_cast<size_t>(category)];
  }
  bool operator==(const TrafficCounts&) const = default;
};

TrafficCounts CountTrafficCategories(std::span<const HttpTransaction> transactions,
                                     const CategoryList& categories);

struct RedirectStats {
  int64_t chain_max_length = 0;
  int64_t redirect_count = 0;
  // "1**" .. "5**"; only classes that occur are present.
  std::map<std::string, int64_t> status_class_counts;

  bool operator==(const RedirectStats&) const = default;
};

RedirectStats ComputeRedirectStats(std::span<const HttpTransaction> transactions);

FeatureVector ExtractFeatures(const WebsiteRecord& record,
                              const FeatureCatalog& catalog,
                              const CategoryList& categories);
FeatureVector ExtractFeatures(const WebsiteRecord& record,
                              const FeatureCatalog& catalog = FeatureCatalog::Default());

// Output rows are in input order.
FeatureMatrix ExtractMatrix(std::span<const WebsiteRecord> records,
                            const FeatureCatalog& catalog,
                            const CategoryList& categories);

nlohmann::json MatrixToJson(const FeatureMatrix& matrix);
FeatureMatrix MatrixFromJson(const nlohmann::json& json);
FeatureMatrix LoadMatrix(const std::filesystem::path& path);
void SaveMatrix(const std::filesystem::path& path, const FeatureMatrix& matrix);

// Indices of |names| in |catalog|, in the order given. Throws InvariantError
// on an unknown name.
std::vector<size_t> ResolveFeatureNames(const FeatureCatalog& catalog,
                                        std::span<const std::string> names);

// Keeps only the names whose catalog entry is realtime_available.
std::vector<std::string> RealtimeSubset(const FeatureCatalog& catalog,
                                        std::span<const std::string> names);

}  // namespace sitelens
