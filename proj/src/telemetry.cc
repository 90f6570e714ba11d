#include "sitelens/telemetry.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "sitelens/domain_name.h"
#include "sitelens/error.h"

namespace sitelens {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kTimingMarkCount> kTimingMarkNames = {
    "domainLookupStart",
    "domainLookupEnd",
    "connectStart",
    "connectEnd",
    "secureConnectionStart",
    "requestStart",
    "responseStart",
    "responseEnd",
    "fetchStart",
    "domLoading",
    "domInteractive",
    "domContentLoadedEventStart",
    "domContentLoadedEventEnd",
    "domComplete",
    "loadEventStart",
    "loadEventEnd",
    "firstMeaningfulPaint",
};

constexpr std::array<std::string_view, kTrackerCategoryCount>
    kTrackerCategoryNames = {"advertising", "analytics", "social", "widget"};

constexpr std::array<std::string_view, kResourceKindCount> kResourceKindNames =
    {"image", "css", "js", "text", "audio", "video", "font", "other"};

// Reads typed fields out of a JSON object, reporting failures with the full
// dotted path of the field.
class FieldReader {
 public:
  FieldReader(const json& object, std::string path)
      : object_(object), path_(std::move(path)) {
    if (!object_.is_object())
      throw DataError("field " + Describe() + ": expected object");
  }

  const json& Required(const char* name) const {
    auto it = object_.find(name);
    if (it == object_.end())
      throw DataError("field " + Child(name) + ": missing");
    return *it;
  }

  const json* Optional(const char* name) const {
    auto it = object_.find(name);
    if (it == object_.end() || it->is_null())
      return nullptr;
    return &*it;
  }

  std::string String(const char* name) const {
    const json& value = Required(name);
    if (!value.is_string())
      throw DataError("field " + Child(name) + ": expected string");
    return value.get<std::string>();
  }

  bool Bool(const char* name) const {
    const json& value = Required(name);
    if (!value.is_boolean())
      throw DataError("field " + Child(name) + ": expected boolean");
    return value.get<bool>();
  }

  int64_t Integer(const char* name) const {
    const json& value = Required(name);
    return AsInteger(value, Child(name));
  }

  std::optional<int64_t> NullableInteger(const char* name) const {
    const json* value = Optional(name);
    if (!value)
      return std::nullopt;
    return AsInteger(*value, Child(name));
  }

  std::optional<double> NullableNumber(const char* name) const {
    const json* value = Optional(name);
    if (!value)
      return std::nullopt;
    if (!value->is_number())
      throw DataError("field " + Child(name) + ": expected number or null");
    return value->get<double>();
  }

  const json& Array(const char* name) const {
    const json& value = Required(name);
    if (!value.is_array())
      throw DataError("field " + Child(name) + ": expected array");
    return value;
  }

  std::string Child(std::string_view name) const {
    return path_.empty() ? std::string(name) : path_ + "." + std::string(name);
  }

 private:
  static int64_t AsInteger(const json& value, const std::string& path) {
    if (value.is_number_integer())
      return value.get<int64_t>();
    if (value.is_number_float()) {
      double d = value.get<double>();
      if (d == static_cast<double>(static_cast<int64_t>(d)))
        return static_cast<int64_t>(d);
    }
    throw DataError("field " + path + ": expected integer");
  }

  std::string Describe() const { return path_.empty() ? "<record>" : path_; }

  const json& object_;
  std::string path_;
};

Date RequireDate(const FieldReader& reader, const char* name) {
  std::string text = reader.String(name);
  auto date = ParseDate(text);
  if (!date)
    throw DataError("field " + reader.Child(name) + ": expected YYYY-MM-DD");
  return *date;
}

json NullableToJson(const std::optional<double>& value) {
  return value ? json(*value) : json(nullptr);
}

[[noreturn]] void Violated(const WebsiteRecord& record, const std::string& what) {
  throw InvariantError(
      (record.domain.empty() ? std::string("<empty domain>") : record.domain) +
      ": " + what);
}

void CheckNonNegative(const WebsiteRecord& record, int64_t value,
                      const char* field) {
  if (value < 0)
    Violated(record, std::string("negative value for ") + field);
}

}  // namespace

std::string_view LabelName(SiteLabel label) {
  return label == SiteLabel::kFake ? "fake" : "real";
}

std::optional<SiteLabel> ParseLabel(std::string_view name) {
  if (name == "fake")
    return SiteLabel::kFake;
  if (name == "real")
    return SiteLabel::kReal;
  return std::nullopt;
}

std::string_view TrackerCategoryName(TrackerCategory category) {
  return kTrackerCategoryNames[static_cast<size_t>(category)];
}

std::optional<TrackerCategory> ParseTrackerCategory(std::string_view name) {
  for (size_t i = 0; i < kTrackerCategoryNames.size(); ++i) {
    if (kTrackerCategoryNames[i] == name)
      return static_cast<TrackerCategory>(i);
  }
  return std::nullopt;
}

std::string_view ResourceKindName(ResourceKind kind) {
  return kResourceKindNames[static_cast<size_t>(kind)];
}

std::optional<ResourceKind> ParseResourceKind(std::string_view name) {
  for (size_t i = 0; i < kResourceKindNames.size(); ++i) {
    if (kResourceKindNames[i] == name)
      return static_cast<ResourceKind>(i);
  }
  return std::nullopt;
}

std::string_view TimingMarkName(TimingMark mark) {
  return kTimingMarkNames[static_cast<size_t>(mark)];
}

std::string FormatDate(Date date) {
  std::chrono::year_month_day ymd(date);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

std::optional<Date> ParseDate(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-')
    return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  auto parse = [](std::string_view s, auto& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  };
  if (!parse(text.substr(0, 4), y) || !parse(text.substr(5, 2), m) ||
      !parse(text.substr(8, 2), d))
    return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(m),
                                  std::chrono::day(d)};
  if (!ymd.ok())
    return std::nullopt;
  return Date(ymd);
}

void ValidateRecord(const WebsiteRecord& record) {
  if (!IsNormalizedHostname(record.domain))
    Violated(record, "domain must be a lowercase hostname without scheme or path");

  const CrawlTelemetry& crawl = record.crawl;
  const DomSnapshotStats& dom = crawl.dom_stats;
  CheckNonNegative(record, dom.node_count, "node_count");
  CheckNonNegative(record, dom.html_class_count, "html_class_count");
  CheckNonNegative(record, dom.layout_object_count, "layout_object_count");
  for (const auto& [tag, count] : dom.element_counts) {
    if (std::find(kDomTags.begin(), kDomTags.end(), tag) == kDomTags.end())
      Violated(record, "unknown element tag '" + tag + "'");
    CheckNonNegative(record, count, "element_counts");
  }

  for (const HttpTransaction& t : crawl.transactions) {
    if (t.status_code < 100 || t.status_code > 599)
      Violated(record, "status_code out of range: " + std::to_string(t.status_code));
  }
  for (const CookieEntry& c : crawl.cookies) {
    if (c.name.empty())
      Violated(record, "cookie with empty name");
  }
  for (const ResourceEntry& r : crawl.resources)
    CheckNonNegative(record, r.size_bytes, "size_bytes");

  CheckNonNegative(record, crawl.js_heap_used_bytes, "js_heap_used_bytes");
  CheckNonNegative(record, crawl.js_heap_total_bytes, "js_heap_total_bytes");
  if (crawl.js_heap_used_bytes > crawl.js_heap_total_bytes)
    Violated(record, "js heap used exceeds js heap total");
  CheckNonNegative(record, crawl.frame_count, "frame_count");
  CheckNonNegative(record, crawl.js_event_listener_count, "js_event_listener_count");
  CheckNonNegative(record, crawl.beacon_pixel_count, "beacon_pixel_count");

  for (int i = 0; i < kTimingMarkCount; ++i) {
    auto value = crawl.timings.marks[i];
    if (value && !(*value >= 0.0))
      Violated(record, "timing mark " +
                           std::string(TimingMarkName(TimingMark(i))) +
                           " is negative");
  }
  static constexpr std::pair<TimingMark, TimingMark> kOrdered[] = {
      {TimingMark::kConnectStart, TimingMark::kConnectEnd},
      {TimingMark::kResponseStart, TimingMark::kResponseEnd},
      {TimingMark::kDomContentLoadedEventStart,
       TimingMark::kDomContentLoadedEventEnd},
      {TimingMark::kLoadEventStart, TimingMark::kLoadEventEnd},
  };
  for (auto [first, second] : kOrdered) {
    auto a = crawl.timings.Get(first);
    auto b = crawl.timings.Get(second);
    if (a && b && *a > *b) {
      Violated(record, "timing order violated (" +
                           std::string(TimingMarkName(first)) + " > " +
                           std::string(TimingMarkName(second)) + ")");
    }
  }

  const HistoryRecord& history = record.history;
  if (history.domain_age_days)
    CheckNonNegative(record, *history.domain_age_days, "domain_age_days");
  CheckNonNegative(record, history.park_count, "park_count");
  CheckNonNegative(record, history.reregistration_count, "reregistration_count");
  CheckNonNegative(record, history.coowned_site_count, "coowned_site_count");
  CheckNonNegative(record, history.coowned_analytics_site_count,
                   "coowned_analytics_site_count");
  std::map<std::string, std::vector<const IpAssignment*>> by_ip;
  for (const IpAssignment& a : history.ip_assignments) {
    if (a.ip.empty())
      Violated(record, "ip assignment with empty ip");
    if (a.start_date > a.end_date)
      Violated(record, "ip assignment for " + a.ip + " ends before it starts");
    by_ip[a.ip].push_back(&a);
  }
  for (auto& [ip, list] : by_ip) {
    std::sort(list.begin(), list.end(), [](auto* x, auto* y) {
      return x->start_date < y->start_date;
    });
    for (size_t i = 1; i < list.size(); ++i) {
      if (list[i]->start_date <= list[i - 1]->end_date)
        Violated(record, "overlapping ip assignments for " + ip);
    }
  }
}

json RecordToJson(const WebsiteRecord& record) {
  const CrawlTelemetry& crawl = record.crawl;
  json dom = {
      {"node_count", crawl.dom_stats.node_count},
      {"html_class_count", crawl.dom_stats.html_class_count},
      {"layout_object_count", crawl.dom_stats.layout_object_count},
      {"element_counts", crawl.dom_stats.element_counts},
  };
  json transactions = json::array();
  for (const HttpTransaction& t : crawl.transactions) {
    transactions.push_back({
        {"url", t.url},
        {"status_code", t.status_code},
        {"is_redirect", t.is_redirect},
        {"third_party", t.third_party},
        {"tracker_category",
         t.tracker_category ? json(TrackerCategoryName(*t.tracker_category))
                            : json(nullptr)},
    });
  }
  json cookies = json::array();
  for (const CookieEntry& c : crawl.cookies) {
    cookies.push_back(
        {{"name", c.name}, {"domain", c.domain}, {"first_party", c.first_party}});
  }
  json resources = json::array();
  for (const ResourceEntry& r : crawl.resources)
    resources.push_back({{"kind", ResourceKindName(r.kind)}, {"size_bytes", r.size_bytes}});
  json timings = json::object();
  for (int i = 0; i < kTimingMarkCount; ++i) {
    timings[std::string(TimingMarkName(TimingMark(i)))] =
        NullableToJson(crawl.timings.marks[i]);
  }

  const HistoryRecord& history = record.history;
  json assignments = json::array();
  for (const IpAssignment& a : history.ip_assignments) {
    assignments.push_back({{"ip", a.ip},
                           {"start_date", FormatDate(a.start_date)},
                           {"end_date", FormatDate(a.end_date)}});
  }

  return {
      {"domain", record.domain},
      {"label", record.label ? json(LabelName(*record.label)) : json(nullptr)},
      {"crawl",
       {
           {"dom_stats", dom},
           {"transactions", transactions},
           {"cookies", cookies},
           {"resources", resources},
           {"timings", timings},
           {"js_heap_used_bytes", crawl.js_heap_used_bytes},
           {"js_heap_total_bytes", crawl.js_heap_total_bytes},
           {"frame_count", crawl.frame_count},
           {"js_event_listener_count", crawl.js_event_listener_count},
           {"beacon_pixel_count", crawl.beacon_pixel_count},
       }},
      {"history",
       {
           {"domain_birth", history.domain_birth
                                ? json(FormatDate(*history.domain_birth))
                                : json(nullptr)},
           {"domain_age_days", history.domain_age_days
                                   ? json(*history.domain_age_days)
                                   : json(nullptr)},
           {"park_count", history.park_count},
           {"reregistration_count", history.reregistration_count},
           {"ip_assignments", assignments},
           {"coowned_site_count", history.coowned_site_count},
           {"coowned_analytics_site_count", history.coowned_analytics_site_count},
       }},
  };
}

WebsiteRecord RecordFromJson(const json& j) {
  FieldReader top(j, "");
  WebsiteRecord record;
  record.domain = top.String("domain");
  if (const json* label = top.Optional("label")) {
    auto parsed = label->is_string() ? ParseLabel(label->get<std::string>())
                                     : std::nullopt;
    if (!parsed)
      throw DataError("field label: expected \"real\", \"fake\" or null");
    record.label = parsed;
  }

  FieldReader crawl(top.Required("crawl"), "crawl");
  CrawlTelemetry& out = record.crawl;
  FieldReader dom(crawl.Required("dom_stats"), "crawl.dom_stats");
  out.dom_stats.node_count = dom.Integer("node_count");
  out.dom_stats.html_class_count = dom.Integer("html_class_count");
  out.dom_stats.layout_object_count = dom.Integer("layout_object_count");
  if (const json* counts = dom.Optional("element_counts")) {
    FieldReader counts_reader(*counts, "crawl.dom_stats.element_counts");
    for (auto it = counts->begin(); it != counts->end(); ++it)
      out.dom_stats.element_counts[it.key()] = counts_reader.Integer(it.key().c_str());
  }

  const json& transactions = crawl.Array("transactions");
  for (size_t i = 0; i < transactions.size(); ++i) {
    FieldReader t(transactions[i], "crawl.transactions[" + std::to_string(i) + "]");
    HttpTransaction tx;
    tx.url = t.String("url");
    tx.status_code = static_cast<int>(t.Integer("status_code"));
    tx.is_redirect = t.Bool("is_redirect");
    tx.third_party = t.Bool("third_party");
    if (const json* category = t.Optional("tracker_category")) {
      tx.tracker_category = category->is_string()
                                ? ParseTrackerCategory(category->get<std::string>())
                                : std::nullopt;
      if (!tx.tracker_category)
        throw DataError("field " + t.Child("tracker_category") +
                        ": unknown tracker category");
    }
    out.transactions.push_back(std::move(tx));
  }

  const json& cookies = crawl.Array("cookies");
  for (size_t i = 0; i < cookies.size(); ++i) {
    FieldReader c(cookies[i], "crawl.cookies[" + std::to_string(i) + "]");
    out.cookies.push_back({c.String("name"), c.String("domain"), c.Bool("first_party")});
  }

  const json& resources = crawl.Array("resources");
  for (size_t i = 0; i < resources.size(); ++i) {
    FieldReader r(resources[i], "crawl.resources[" + std::to_string(i) + "]");
    auto kind = ParseResourceKind(r.String("kind"));
    if (!kind)
      throw DataError("field " + r.Child("kind") + ": unknown resource kind");
    out.resources.push_back({*kind, r.Integer("size_bytes")});
  }

  FieldReader timings(crawl.Required("timings"), "crawl.timings");
  for (int i = 0; i < kTimingMarkCount; ++i) {
    std::string name(TimingMarkName(TimingMark(i)));
    out.timings.marks[i] = timings.NullableNumber(name.c_str());
  }
  out.js_heap_used_bytes = crawl.Integer("js_heap_used_bytes");
  out.js_heap_total_bytes = crawl.Integer("js_heap_total_bytes");
  out.frame_count = crawl.Integer("frame_count");
  out.js_event_listener_count = crawl.Integer("js_event_listener_count");
  out.beacon_pixel_count = crawl.Integer("beacon_pixel_count");

  FieldReader history(top.Required("history"), "history");
  HistoryRecord& h = record.history;
  if (history.Optional("domain_birth"))
    h.domain_birth = RequireDate(history, "domain_birth");
  h.domain_age_days = history.NullableInteger("domain_age_days");
  h.park_count = history.Integer("park_count");
  h.reregistration_count = history.Integer("reregistration_count");
  const json& assignments = history.Array("ip_assignments");
  for (size_t i = 0; i < assignments.size(); ++i) {
    FieldReader a(assignments[i], "history.ip_assignments[" + std::to_string(i) + "]");
    h.ip_assignments.push_back(
        {a.String("ip"), RequireDate(a, "start_date"), RequireDate(a, "end_date")});
  }
  h.coowned_site_count = history.Integer("coowned_site_count");
  h.coowned_analytics_site_count = history.Integer("coowned_analytics_site_count");
  return record;
}

std::vector<WebsiteRecord> ParseDataset(std::istream& in) {
  std::vector<WebsiteRecord> records;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    WebsiteRecord record;
    try {
      json j = json::parse(line);
      record = RecordFromJson(j);
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_number) +
                      ": invalid JSON: " + e.what());
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_number) + ": " + e.what());
    }
    try {
      ValidateRecord(record);
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(line_number) + ": " + e.what());
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<WebsiteRecord> LoadDataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open dataset " + path.string());
  return ParseDataset(in);
}

std::string SerializeDataset(const std::vector<WebsiteRecord>& records) {
  std::string out;
  for (const WebsiteRecord& record : records) {
    out += RecordToJson(record).dump();
    out += '\n';
  }
  return out;
}

void SaveDataset(const std::filesystem::path& path,
                 const std::vector<WebsiteRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write dataset " + path.string());
  out << SerializeDataset(records);
}

}  // namespace sitelens
