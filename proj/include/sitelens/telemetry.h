#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sitelens {

using Date = std::chrono::sys_days;

enum class SiteLabel { kReal, kFake };

enum class TrackerCategory { kAdvertising, kAnalytics, kSocial, kWidget };
inline constexpr int kTrackerCategoryCount = 4;

enum class ResourceKind { kImage, kCss, kJs, kText, kAudio, kVideo, kFont, kOther };
inline constexpr int kResourceKindCount = 8;

// Navigation-timing marks, in milliseconds since navigation start.
enum class TimingMark {
  kDomainLookupStart,
  kDomainLookupEnd,
  kConnectStart,
  kConnectEnd,
  kSecureConnectionStart,
  kRequestStart,
  kResponseStart,
  kResponseEnd,
  kFetchStart,
  kDomLoading,
  kDomInteractive,
  kDomContentLoadedEventStart,
  kDomContentLoadedEventEnd,
  kDomComplete,
  kLoadEventStart,
  kLoadEventEnd,
  kFirstMeaningfulPaint,
};
inline constexpr int kTimingMarkCount = 17;

// Tags counted in DomSnapshotStats::element_counts.
inline constexpr std::array<std::string_view, 16> kDomTags = {
    "div",  "p",      "a",    "img",  "button", "section", "span", "iframe",
    "script", "link", "form", "ul",   "li",     "table",   "video", "audio"};

std::string_view LabelName(SiteLabel label);
std::optional<SiteLabel> ParseLabel(std::string_view name);
std::string_view TrackerCategoryName(TrackerCategory category);
std::optional<TrackerCategory> ParseTrackerCategory(std::string_view name);
std::string_view ResourceKindName(ResourceKind kind);
std::optional<ResourceKind> ParseResourceKind(std::string_view name);
// Verbatim navigation-timing name, e.g. "domContentLoadedEventStart".
std::string_view TimingMarkName(TimingMark mark);

std::string FormatDate(Date date);
std::optional<Date> ParseDate(std::string_view text);

struct DomSnapshotStats {
  int64_t node_count = 0;
  int64_t html_class_count = 0;
  int64_t layout_object_count = 0;
  std::map<std::string, int64_t> element_counts;

  bool operator==(const DomSnapshotStats&) const = default;
};

struct HttpTransaction {
  std::string url;
  int status_code = 200;
  bool is_redirect = false;
  bool third_party = false;
  std::optional<TrackerCategory> tracker_category;

  bool operator==(const HttpTransaction&) const = default;
};

struct ResourceEntry {
  ResourceKind kind = ResourceKind::kOther;
  int64_t size_bytes = 0;

  bool operator==(const ResourceEntry&) const = default;
};

struct CookieEntry {
  std::string name;
  std::string domain;
  bool first_party = false;

  bool operator==(const CookieEntry&) const = default;
};

// An unset mark is "absent", which is distinct from a measured zero.
struct TimingProfile {
  std::array<std::optional<double>, kTimingMarkCount> marks;

  std::optional<double> Get(TimingMark mark) const {
    return marks[static_cast<size_t>(mark)];
  }
  void Set(TimingMark mark, std::optional<double> value) {
    marks[static_cast<size_t>(mark)] = value;
  }

  bool operator==(const TimingProfile&) const = default;
};

struct CrawlTelemetry {
  DomSnapshotStats dom_stats;
  std::vector<HttpTransaction> transactions;
  std::vector<CookieEntry> cookies;
  std::vector<ResourceEntry> resources;
  TimingProfile timings;
  int64_t js_heap_used_bytes = 0;
  int64_t js_heap_total_bytes = 0;
  int64_t frame_count = 0;
  int64_t js_event_listener_count = 0;
  int64_t beacon_pixel_count = 0;

  bool operator==(const CrawlTelemetry&) const = default;
};

struct IpAssignment {
  std::string ip;
  Date start_date;
  Date end_date;

  bool operator==(const IpAssignment&) const = default;
};

struct HistoryRecord {
  std::optional<Date> domain_birth;
  std::optional<int64_t> domain_age_days;
  int64_t park_count = 0;
  int64_t reregistration_count = 0;
  std::vector<IpAssignment> ip_assignments;
  int64_t coowned_site_count = 0;
  int64_t coowned_analytics_site_count = 0;

  bool operator==(const HistoryRecord&) const = default;
};

struct WebsiteRecord {
  std::string domain;
  std::optional<SiteLabel> label;
  CrawlTelemetry crawl;
  HistoryRecord history;

  bool operator==(const WebsiteRecord&) const = default;
};

// Throws InvariantError naming the domain and the violated invariant.
void ValidateRecord(const WebsiteRecord& record);

nlohmann::json RecordToJson(const WebsiteRecord& record);
// Throws DataError naming the offending field path. Does not validate.
WebsiteRecord RecordFromJson(const nlohmann::json& json);

// Newline-delimited JSON, one record per line. Blank lines are skipped.
std::vector<WebsiteRecord> ParseDataset(std::istream& in);
std::vector<WebsiteRecord> LoadDataset(const std::filesystem::path& path);
std::string SerializeDataset(const std::vector<WebsiteRecord>& records);
void SaveDataset(const std::filesystem::path& path,
                 const std::vector<WebsiteRecord>& records);

}  // namespace sitelens
