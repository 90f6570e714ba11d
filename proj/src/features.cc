#include "sitelens/features.h"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "sitelens/domain_name.h"
#include "sitelens/error.h"
#include "sitelens/hash.h"
#include "sitelens/preprocess.h"

namespace sitelens {
namespace {

constexpr std::array<std::string_view, 8> kSourceNames = {
    "dns", "ip", "dom", "http", "html", "traffic", "cookie", "redirect"};

constexpr double kDaysPerYear = 365.25;

// Everything the individual feature functions read, computed once per record.
struct RecordSummary {
  const WebsiteRecord* record = nullptr;

  std::array<int64_t, kResourceKindCount> kind_size{};
  std::array<int64_t, kResourceKindCount> kind_count{};
  std::array<int64_t, kResourceKindCount> kind_max{};
  int64_t page_size = 0;
  int64_t max_resource = 0;
  int64_t element_total = 0;

  std::vector<int64_t> assignment_days;
  std::optional<int64_t> ip_max_held_days;
  std::optional<int64_t> ip_current_days;
  std::optional<int64_t> ip_span_days;
  int64_t distinct_ips = 0;

  TrafficCounts traffic;
  RedirectStats redirects;
  int64_t third_party_requests = 0;
  int64_t distinct_hosts = 0;
  int64_t distinct_third_party_hosts = 0;
  int64_t distinct_tracker_hosts = 0;

  int64_t first_party_cookies = 0;
  int64_t distinct_cookie_domains = 0;

  const CrawlTelemetry& crawl() const { return record->crawl; }
  const HistoryRecord& history() const { return record->history; }
  std::optional<double> Mark(TimingMark mark) const {
    return record->crawl.timings.Get(mark);
  }
  int64_t requests() const {
    return static_cast<int64_t>(record->crawl.transactions.size());
  }
  int64_t Tag(std::string_view tag) const {
    auto it = record->crawl.dom_stats.element_counts.find(std::string(tag));
    return it == record->crawl.dom_stats.element_counts.end() ? 0 : it->second;
  }
  int64_t StatusClass(const char* cls) const {
    auto it = redirects.status_class_counts.find(cls);
    return it == redirects.status_class_counts.end() ? 0 : it->second;
  }
};

using FeatureFn = std::function<FeatureValue(const RecordSummary&)>;

struct Extractor {
  std::string name;
  FeatureSource source;
  FeatureFn fn;
};

// Zero when the denominator is zero: an empty page has no share of anything.
double Ratio(double numerator, double denominator) {
  return denominator == 0.0 ? 0.0 : numerator / denominator;
}

FeatureValue Difference(std::optional<double> later, std::optional<double> earlier) {
  if (!later || !earlier)
    return std::nullopt;
  return *later - *earlier;
}

RecordSummary Summarize(const WebsiteRecord& record, const CategoryList& categories) {
  RecordSummary s;
  s.record = &record;
  const CrawlTelemetry& crawl = record.crawl;

  for (const ResourceEntry& r : crawl.resources) {
    size_t k = static_cast<size_t>(r.kind);
    s.kind_size[k] += r.size_bytes;
    s.kind_count[k] += 1;
    s.kind_max[k] = std::max(s.kind_max[k], r.size_bytes);
    s.page_size += r.size_bytes;
    s.max_resource = std::max(s.max_resource, r.size_bytes);
  }
  for (const auto& [tag, count] : crawl.dom_stats.element_counts)
    s.element_total += count;

  std::map<std::string, int64_t> held;
  std::optional<Date> first_start, last_end;
  const IpAssignment* latest = nullptr;
  for (const IpAssignment& a : record.history.ip_assignments) {
    int64_t days = (a.end_date - a.start_date).count();
    s.assignment_days.push_back(days);
    held[a.ip] += days;
    if (!first_start || a.start_date < *first_start)
      first_start = a.start_date;
    if (!last_end || a.end_date > *last_end)
      last_end = a.end_date;
    if (!latest || a.end_date > latest->end_date ||
        (a.end_date == latest->end_date && a.start_date > latest->start_date))
      latest = &a;
  }
  s.distinct_ips = static_cast<int64_t>(held.size());
  for (const auto& [ip, days] : held)
    s.ip_max_held_days = std::max(s.ip_max_held_days.value_or(0), days);
  if (latest)
    s.ip_current_days = (latest->end_date - latest->start_date).count();
  if (first_start)
    s.ip_span_days = (*last_end - *first_start).count();

  s.traffic = CountTrafficCategories(crawl.transactions, categories);
  s.redirects = ComputeRedirectStats(crawl.transactions);
  std::set<std::string> hosts, third_party_hosts, tracker_hosts;
  for (const HttpTransaction& t : crawl.transactions) {
    std::string host = HostFromUrl(t.url);
    if (t.third_party) {
      ++s.third_party_requests;
      third_party_hosts.insert(host);
    }
    if (categories.Match(host))
      tracker_hosts.insert(host);
    hosts.insert(std::move(host));
  }
  s.distinct_hosts = static_cast<int64_t>(hosts.size());
  s.distinct_third_party_hosts = static_cast<int64_t>(third_party_hosts.size());
  s.distinct_tracker_hosts = static_cast<int64_t>(tracker_hosts.size());

  std::set<std::string> cookie_domains;
  for (const CookieEntry& c : crawl.cookies) {
    if (c.first_party)
      ++s.first_party_cookies;
    cookie_domains.insert(NormalizeDomain(c.domain));
  }
  s.distinct_cookie_domains = static_cast<int64_t>(cookie_domains.size());
  return s;
}

std::vector<Extractor> BuildRegistry() {
  std::vector<Extractor> r;
  auto add = [&r](std::string name, FeatureSource source, FeatureFn fn) {
    r.push_back({std::move(name), source, std::move(fn)});
  };
  auto mark = [&add](std::string name, FeatureSource source, TimingMark m) {
    add(std::move(name), source, [m](const RecordSummary& s) { return s.Mark(m); });
  };
  using S = FeatureSource;
  using TM = TimingMark;

  // DNS history.
  add("domain_birth", S::kDns, [](const RecordSummary& s) -> FeatureValue {
    if (!s.history().domain_birth)
      return std::nullopt;
    return static_cast<double>(s.history().domain_birth->time_since_epoch().count());
  });
  add("domain_age_days", S::kDns, [](const RecordSummary& s) -> FeatureValue {
    if (!s.history().domain_age_days)
      return std::nullopt;
    return static_cast<double>(*s.history().domain_age_days);
  });
  mark("domainLookupStart", S::kDns, TM::kDomainLookupStart);
  mark("domainLookupEnd", S::kDns, TM::kDomainLookupEnd);

  // IP history.
  add("IP_change_after_max", S::kIp, [](const RecordSummary& s) -> FeatureValue {
    if (!s.ip_max_held_days)
      return std::nullopt;
    return static_cast<double>(*s.ip_max_held_days);
  });
  add("IP_age_days", S::kIp, [](const RecordSummary& s) -> FeatureValue {
    if (s.assignment_days.empty())
      return std::nullopt;
    double sum = 0.0;
    for (int64_t d : s.assignment_days)
      sum += static_cast<double>(d);
    return sum / static_cast<double>(s.assignment_days.size());
  });
  add("total_coownedSites", S::kIp, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.history().coowned_site_count);
  });
  add("numOfsites_coowned_analytics", S::kIp, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.history().coowned_analytics_site_count);
  });

  // Navigation timing marks.
  mark("domLoading", S::kDom, TM::kDomLoading);
  mark("domContentLoadedEventStart", S::kDom, TM::kDomContentLoadedEventStart);
  mark("domContentLoadedEventEnd", S::kDom, TM::kDomContentLoadedEventEnd);
  mark("domComplete", S::kDom, TM::kDomComplete);
  mark("domInteractive", S::kDom, TM::kDomInteractive);
  mark("connectStart", S::kHttp, TM::kConnectStart);
  mark("connectEnd", S::kHttp, TM::kConnectEnd);
  mark("responseStart", S::kHttp, TM::kResponseStart);
  mark("responseEnd", S::kHttp, TM::kResponseEnd);
  mark("requestStart", S::kHttp, TM::kRequestStart);
  mark("fetchStart", S::kHttp, TM::kFetchStart);
  mark("secureConnectionStart", S::kHttp, TM::kSecureConnectionStart);
  mark("loadEventEnd", S::kHttp, TM::kLoadEventEnd);
  mark("loadEventStart", S::kHttp, TM::kLoadEventStart);

  // Page structure and weight.
  add("LayoutObjects", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().dom_stats.layout_object_count);
  });
  add("Nodes", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().dom_stats.node_count);
  });
  add("JSHeapUsedSize", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().js_heap_used_bytes);
  });
  add("JSHeapTotalSize", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().js_heap_total_bytes);
  });
  mark("FirstMeaningfulPaint", S::kHtml, TM::kFirstMeaningfulPaint);
  add("HTML_classes", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().dom_stats.html_class_count);
  });
  add("page_size", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.page_size);
  });
  for (ResourceKind kind : {ResourceKind::kImage, ResourceKind::kCss, ResourceKind::kText,
                            ResourceKind::kJs, ResourceKind::kAudio, ResourceKind::kVideo,
                            ResourceKind::kFont, ResourceKind::kOther}) {
    add(std::string(ResourceKindName(kind)) + "_size", S::kHtml,
        [k = size_t(kind)](const RecordSummary& s) -> FeatureValue {
          return static_cast<double>(s.kind_size[k]);
        });
  }

  // Remaining history-derived features.
  add("park_count", S::kDns, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.history().park_count);
  });
  add("reregistration_count", S::kDns, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.history().reregistration_count);
  });
  add("domain_age_years", S::kDns, [](const RecordSummary& s) -> FeatureValue {
    if (!s.history().domain_age_days)
      return std::nullopt;
    return static_cast<double>(*s.history().domain_age_days) / kDaysPerYear;
  });
  add("dns_lookup_duration", S::kDns, [](const RecordSummary& s) {
    return Difference(s.Mark(TM::kDomainLookupEnd), s.Mark(TM::kDomainLookupStart));
  });
  add("ip_distinct_count", S::kIp, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.distinct_ips);
  });
  add("ip_assignment_count", S::kIp, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.assignment_days.size());
  });
  add("IP_age_min_days", S::kIp, [](const RecordSummary& s) -> FeatureValue {
    if (s.assignment_days.empty())
      return std::nullopt;
    return static_cast<double>(
        *std::min_element(s.assignment_days.begin(), s.assignment_days.end()));
  });
  add("ip_current_age_days", S::kIp, [](const RecordSummary& s) -> FeatureValue {
    if (!s.ip_current_days)
      return std::nullopt;
    return static_cast<double>(*s.ip_current_days);
  });
  add("ip_history_span_days", S::kIp, [](const RecordSummary& s) -> FeatureValue {
    if (!s.ip_span_days)
      return std::nullopt;
    return static_cast<double>(*s.ip_span_days);
  });
  add("ip_changes_per_year", S::kIp, [](const RecordSummary& s) -> FeatureValue {
    if (!s.ip_span_days)
      return std::nullopt;
    double changes = static_cast<double>(s.assignment_days.size()) - 1.0;
    return Ratio(changes, static_cast<double>(*s.ip_span_days) / kDaysPerYear);
  });
  add("coowned_analytics_ratio", S::kIp, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.history().coowned_analytics_site_count),
                 static_cast<double>(s.history().coowned_site_count));
  });

  // Timing intervals.
  auto interval = [&add](std::string name, FeatureSource source, TM later, TM earlier) {
    add(std::move(name), source, [later, earlier](const RecordSummary& s) {
      return Difference(s.Mark(later), s.Mark(earlier));
    });
  };
  interval("connect_duration", S::kHttp, TM::kConnectEnd, TM::kConnectStart);
  interval("secure_connection_duration", S::kHttp, TM::kConnectEnd,
           TM::kSecureConnectionStart);
  interval("request_wait_duration", S::kHttp, TM::kResponseStart, TM::kRequestStart);
  interval("response_duration", S::kHttp, TM::kResponseEnd, TM::kResponseStart);
  interval("page_load_time", S::kHttp, TM::kLoadEventEnd, TM::kFetchStart);
  interval("load_event_duration", S::kHttp, TM::kLoadEventEnd, TM::kLoadEventStart);
  interval("dom_content_loaded_duration", S::kDom, TM::kDomContentLoadedEventEnd,
           TM::kDomContentLoadedEventStart);
  interval("dom_processing_duration", S::kDom, TM::kDomComplete, TM::kDomLoading);
  interval("dom_interactive_delay", S::kDom, TM::kDomInteractive, TM::kDomLoading);
  interval("time_to_dom_complete", S::kDom, TM::kDomComplete, TM::kFetchStart);
  interval("fmp_after_response", S::kHtml, TM::kFirstMeaningfulPaint, TM::kResponseEnd);

  // DOM element distribution.
  for (std::string_view tag : kDomTags) {
    add(std::string(tag) + "_elements", S::kDom, [tag](const RecordSummary& s) -> FeatureValue {
      return static_cast<double>(s.Tag(tag));
    });
  }
  for (std::string_view tag : kDomTags) {
    add(std::string(tag) + "_element_share", S::kDom, [tag](const RecordSummary& s) -> FeatureValue {
      return Ratio(static_cast<double>(s.Tag(tag)), static_cast<double>(s.element_total));
    });
  }
  for (std::string_view tag : kDomTags) {
    add(std::string(tag) + "_per_node", S::kDom, [tag](const RecordSummary& s) -> FeatureValue {
      return Ratio(static_cast<double>(s.Tag(tag)),
                   static_cast<double>(s.crawl().dom_stats.node_count));
    });
  }
  add("element_total", S::kDom, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.element_total);
  });
  add("classes_per_node", S::kDom, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.crawl().dom_stats.html_class_count),
                 static_cast<double>(s.crawl().dom_stats.node_count));
  });
  add("layout_objects_per_node", S::kDom, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.crawl().dom_stats.layout_object_count),
                 static_cast<double>(s.crawl().dom_stats.node_count));
  });

  // Resource composition.
  for (int k = 0; k < kResourceKindCount; ++k) {
    add(std::string(ResourceKindName(ResourceKind(k))) + "_count", S::kHtml,
        [k](const RecordSummary& s) -> FeatureValue {
          return static_cast<double>(s.kind_count[k]);
        });
  }
  add("resource_count", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().resources.size());
  });
  for (int k = 0; k < kResourceKindCount; ++k) {
    add(std::string(ResourceKindName(ResourceKind(k))) + "_share", S::kHtml,
        [k](const RecordSummary& s) -> FeatureValue {
          return Ratio(static_cast<double>(s.kind_size[k]),
                       static_cast<double>(s.page_size));
        });
  }
  for (int k = 0; k < kResourceKindCount; ++k) {
    add(std::string(ResourceKindName(ResourceKind(k))) + "_mean_size", S::kHtml,
        [k](const RecordSummary& s) -> FeatureValue {
          if (s.kind_count[k] == 0)
            return std::nullopt;
          return static_cast<double>(s.kind_size[k]) /
                 static_cast<double>(s.kind_count[k]);
        });
  }
  for (int k = 0; k < kResourceKindCount; ++k) {
    add(std::string(ResourceKindName(ResourceKind(k))) + "_max_size", S::kHtml,
        [k](const RecordSummary& s) -> FeatureValue {
          if (s.kind_count[k] == 0)
            return std::nullopt;
          return static_cast<double>(s.kind_max[k]);
        });
  }
  add("mean_resource_size", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    if (s.crawl().resources.empty())
      return std::nullopt;
    return static_cast<double>(s.page_size) /
           static_cast<double>(s.crawl().resources.size());
  });
  add("max_resource_size", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    if (s.crawl().resources.empty())
      return std::nullopt;
    return static_cast<double>(s.max_resource);
  });
  add("bytes_per_request", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.page_size), static_cast<double>(s.requests()));
  });

  // Script and embedding activity.
  add("js_heap_used_ratio", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.crawl().js_heap_used_bytes),
                 static_cast<double>(s.crawl().js_heap_total_bytes));
  });
  add("js_heap_free_size", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().js_heap_total_bytes -
                               s.crawl().js_heap_used_bytes);
  });
  add("frame_count", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().frame_count);
  });
  add("frames_per_node", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.crawl().frame_count),
                 static_cast<double>(s.crawl().dom_stats.node_count));
  });
  add("js_event_listener_count", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().js_event_listener_count);
  });
  add("listeners_per_node", S::kHtml, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.crawl().js_event_listener_count),
                 static_cast<double>(s.crawl().dom_stats.node_count));
  });
  add("beacon_pixel_count", S::kTraffic, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().beacon_pixel_count);
  });
  add("beacons_per_image", S::kTraffic, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.crawl().beacon_pixel_count),
                 static_cast<double>(s.kind_count[size_t(ResourceKind::kImage)]));
  });

  // Third-party and tracker traffic.
  add("request_count", S::kTraffic, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.requests());
  });
  add("first_party_request_count", S::kTraffic, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.requests() - s.third_party_requests);
  });
  add("third_party_request_count", S::kTraffic, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.third_party_requests);
  });
  add("third_party_request_ratio", S::kTraffic, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.third_party_requests),
                 static_cast<double>(s.requests()));
  });
  for (int c = 0; c < kTrackerCategoryCount; ++c) {
    add(std::string("tracker_") + std::string(TrackerCategoryName(TrackerCategory(c))) +
            "_count",
        S::kTraffic, [c](const RecordSummary& s) -> FeatureValue {
          return static_cast<double>(s.traffic.tracked[c]);
        });
  }
  add("tracker_none_count", S::kTraffic, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.traffic.none);
  });
  add("tracker_request_count", S::kTraffic, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.requests() - s.traffic.none);
  });
  for (int c = 0; c < kTrackerCategoryCount; ++c) {
    add(std::string("tracker_") + std::string(TrackerCategoryName(TrackerCategory(c))) +
            "_ratio",
        S::kTraffic, [c](const RecordSummary& s) -> FeatureValue {
          return Ratio(static_cast<double>(s.traffic.tracked[c]),
                       static_cast<double>(s.requests()));
        });
  }
  add("distinct_request_hosts", S::kTraffic, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.distinct_hosts);
  });
  add("distinct_third_party_hosts", S::kTraffic, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.distinct_third_party_hosts);
  });
  add("distinct_tracker_hosts", S::kTraffic, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.distinct_tracker_hosts);
  });

  // Cookies.
  add("cookie_count", S::kCookie, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().cookies.size());
  });
  add("first_party_cookie_count", S::kCookie, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.first_party_cookies);
  });
  add("third_party_cookie_count", S::kCookie, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.crawl().cookies.size()) - s.first_party_cookies;
  });
  add("third_party_cookie_ratio", S::kCookie, [](const RecordSummary& s) -> FeatureValue {
    double total = static_cast<double>(s.crawl().cookies.size());
    return Ratio(total - s.first_party_cookies, total);
  });
  add("distinct_cookie_domains", S::kCookie, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.distinct_cookie_domains);
  });
  add("cookies_per_request", S::kCookie, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.crawl().cookies.size()),
                 static_cast<double>(s.requests()));
  });

  // Redirects and response status classes.
  add("redirect_count", S::kRedirect, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.redirects.redirect_count);
  });
  add("redirect_chain_max", S::kRedirect, [](const RecordSummary& s) -> FeatureValue {
    return static_cast<double>(s.redirects.chain_max_length);
  });
  add("redirect_ratio", S::kRedirect, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.redirects.redirect_count),
                 static_cast<double>(s.requests()));
  });
  for (const char* cls : {"1**", "2**", "3**", "4**", "5**"}) {
    add(std::string("status_") + cls[0] + "xx_count", S::kRedirect,
        [cls](const RecordSummary& s) -> FeatureValue {
          return static_cast<double>(s.StatusClass(cls));
        });
  }
  add("status_2xx_ratio", S::kRedirect, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.StatusClass("2**")),
                 static_cast<double>(s.requests()));
  });
  add("status_error_ratio", S::kRedirect, [](const RecordSummary& s) -> FeatureValue {
    return Ratio(static_cast<double>(s.StatusClass("4**") + s.StatusClass("5**")),
                 static_cast<double>(s.requests()));
  });
  return r;
}

const std::vector<Extractor>& Registry() {
  static const std::vector<Extractor> registry = BuildRegistry();
  return registry;
}

const std::unordered_map<std::string, size_t>& RegistryIndex() {
  static const std::unordered_map<std::string, size_t> index = [] {
    std::unordered_map<std::string, size_t> out;
    for (size_t i = 0; i < Registry().size(); ++i)
      out.emplace(Registry()[i].name, i);
    return out;
  }();
  return index;
}

bool IsRealtimeSource(FeatureSource source) {
  return source != FeatureSource::kDns && source != FeatureSource::kIp;
}

}  // namespace

struct FeatureExtractorAccess {
  static const std::vector<size_t>& Slots(const FeatureCatalog& catalog) {
    return catalog.slots_;
  }
};

std::string_view FeatureSourceName(FeatureSource source) {
  return kSourceNames[static_cast<size_t>(source)];
}

std::optional<FeatureSource> ParseFeatureSource(std::string_view name) {
  for (size_t i = 0; i < kSourceNames.size(); ++i) {
    if (kSourceNames[i] == name)
      return static_cast<FeatureSource>(i);
  }
  return std::nullopt;
}

FeatureCatalog::FeatureCatalog(std::vector<FeatureSpec> entries)
    : entries_(std::move(entries)) {
  if (entries_.size() != kCatalogSize) {
    throw InvariantError("feature catalog must have exactly " +
                         std::to_string(kCatalogSize) + " entries, got " +
                         std::to_string(entries_.size()));
  }
  for (size_t i = 0; i < entries_.size(); ++i) {
    const FeatureSpec& spec = entries_[i];
    if (!index_.emplace(spec.name, i).second)
      throw InvariantError("duplicate feature name in catalog: " + spec.name);
    auto slot = RegistryIndex().find(spec.name);
    if (slot == RegistryIndex().end())
      throw InvariantError("catalog names an unknown feature: " + spec.name);
    if (Registry()[slot->second].source != spec.source) {
      throw InvariantError("catalog source for " + spec.name + " should be " +
                           std::string(FeatureSourceName(Registry()[slot->second].source)));
    }
    slots_.push_back(slot->second);
  }
  int offline_top = 0;
  for (std::string_view name : kDefaultTopFeatures) {
    auto it = index_.find(std::string(name));
    if (it == index_.end())
      throw InvariantError("catalog is missing top feature " + std::string(name));
    if (!entries_[it->second].realtime_available)
      ++offline_top;
  }
  if (offline_top != 8) {
    throw InvariantError("exactly 8 top features must be unavailable in real time, got " +
                         std::to_string(offline_top));
  }
}

const FeatureCatalog& FeatureCatalog::Default() {
  static const FeatureCatalog catalog = [] {
    std::vector<FeatureSpec> entries;
    for (const Extractor& e : Registry())
      entries.push_back({e.name, e.source, IsRealtimeSource(e.source)});
    return FeatureCatalog(std::move(entries));
  }();
  return catalog;
}

FeatureCatalog FeatureCatalog::Parse(std::istream& in) {
  std::vector<FeatureSpec> entries;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, '\t');)
      fields.push_back(field);
    auto source = fields.size() == 3 ? ParseFeatureSource(fields[1]) : std::nullopt;
    if (!source || (fields[2] != "0" && fields[2] != "1")) {
      throw DataError("catalog line " + std::to_string(line_number) +
                      ": expected name<TAB>source<TAB>realtime{0|1}");
    }
    entries.push_back({fields[0], *source, fields[2] == "1"});
  }
  return FeatureCatalog(std::move(entries));
}

FeatureCatalog FeatureCatalog::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open catalog " + path.string());
  return Parse(in);
}

std::string FeatureCatalog::Serialize() const {
  std::string out;
  for (const FeatureSpec& spec : entries_) {
    out += spec.name;
    out += '\t';
    out += FeatureSourceName(spec.source);
    out += '\t';
    out += spec.realtime_available ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string FeatureCatalog::Hash() const { return Sha256Hex(Serialize()); }

std::optional<size_t> FeatureCatalog::IndexOf(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end())
    return std::nullopt;
  return it->second;
}

std::vector<std::string> FeatureCatalog::Names() const {
  std::vector<std::string> names;
  names.reserve(entries_.size());
  for (const FeatureSpec& spec : entries_)
    names.push_back(spec.name);
  return names;
}

CategoryList::CategoryList(std::vector<std::pair<std::string, TrackerCategory>> entries)
    : entries_(std::move(entries)) {
  for (auto& [suffix, category] : entries_) {
    suffix = NormalizeDomain(suffix);
    if (!by_suffix_.emplace(suffix, category).second)
      throw InvariantError("duplicate host suffix in category list: " + suffix);
  }
}

const CategoryList& CategoryList::Default() {
  using TC = TrackerCategory;
  static const CategoryList list({
      {"doubleclick.net", TC::kAdvertising},
      {"googlesyndication.com", TC::kAdvertising},
      {"adnxs.com", TC::kAdvertising},
      {"criteo.com", TC::kAdvertising},
      {"taboola.com", TC::kAdvertising},
      {"outbrain.com", TC::kAdvertising},
      {"google-analytics.com", TC::kAnalytics},
      {"googletagmanager.com", TC::kAnalytics},
      {"scorecardresearch.com", TC::kAnalytics},
      {"chartbeat.com", TC::kAnalytics},
      {"quantserve.com", TC::kAnalytics},
      {"hotjar.com", TC::kAnalytics},
      {"facebook.net", TC::kSocial},
      {"facebook.com", TC::kSocial},
      {"twitter.com", TC::kSocial},
      {"linkedin.com", TC::kSocial},
      {"addthis.com", TC::kWidget},
      {"sharethis.com", TC::kWidget},
      {"disqus.com", TC::kWidget},
      {"static.facebook.com", TC::kWidget},
  });
  return list;
}

CategoryList CategoryList::Parse(std::istream& in) {
  std::vector<std::pair<std::string, TrackerCategory>> entries;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    size_t tab = line.find('\t');
    auto category = tab == std::string::npos
                        ? std::nullopt
                        : ParseTrackerCategory(std::string_view(line).substr(tab + 1));
    if (!category || tab == 0) {
      throw DataError("category list line " + std::to_string(line_number) +
                      ": expected host_suffix<TAB>category");
    }
    entries.emplace_back(line.substr(0, tab), *category);
  }
  return CategoryList(std::move(entries));
}

CategoryList CategoryList::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open category list " + path.string());
  return Parse(in);
}

std::optional<TrackerCategory> CategoryList::Match(std::string_view host) const {
  // Walk suffixes from the full host down; the first hit is the longest.
  std::string_view candidate = host;
  while (!candidate.empty()) {
    auto it = by_suffix_.find(std::string(candidate));
    if (it != by_suffix_.end())
      return it->second;
    size_t dot = candidate.find('.');
    if (dot == std::string_view::npos)
      break;
    candidate.remove_prefix(dot + 1);
  }
  return std::nullopt;
}

std::string CategoryList::Serialize() const {
  std::string out;
  for (const auto& [suffix, category] : entries_) {
    out += suffix;
    out += '\t';
    out += TrackerCategoryName(category);
    out += '\n';
  }
  return out;
}

TrafficCounts CountTrafficCategories(std::span<const HttpTransaction> transactions,
                                     const CategoryList& categories) {
  TrafficCounts counts;
  for (const HttpTransaction& t : transactions) {
    auto category = categories.Match(HostFromUrl(t.url));
    if (category)
      ++counts.tracked[static_cast<size_t>(*category)];
    else
      ++counts.none;
  }
  return counts;
}

RedirectStats ComputeRedirectStats(std::span<const HttpTransaction> transactions) {
  RedirectStats stats;
  int64_t run = 0;
  for (const HttpTransaction& t : transactions) {
    ++stats.status_class_counts[SummarizeStatus(t.status_code)];
    if (t.is_redirect) {
      ++stats.redirect_count;
      stats.chain_max_length = std::max(stats.chain_max_length, ++run);
    } else {
      run = 0;
    }
  }
  return stats;
}

FeatureVector ExtractFeatures(const WebsiteRecord& record, const FeatureCatalog& catalog,
                              const CategoryList& categories) {
  RecordSummary summary = Summarize(record, categories);
  FeatureVector out{record.domain, record.label, {}};
  out.values.reserve(catalog.size());
  for (size_t slot : FeatureExtractorAccess::Slots(catalog))
    out.values.push_back(Registry()[slot].fn(summary));
  return out;
}

FeatureVector ExtractFeatures(const WebsiteRecord& record, const FeatureCatalog& catalog) {
  return ExtractFeatures(record, catalog, CategoryList::Default());
}

FeatureMatrix ExtractMatrix(std::span<const WebsiteRecord> records,
                            const FeatureCatalog& catalog,
                            const CategoryList& categories) {
  FeatureMatrix matrix{catalog, {}};
  matrix.rows.reserve(records.size());
  for (const WebsiteRecord& record : records)
    matrix.rows.push_back(ExtractFeatures(record, catalog, categories));
  return matrix;
}

nlohmann::json MatrixToJson(const FeatureMatrix& matrix) {
  nlohmann::json rows = nlohmann::json::array();
  for (const FeatureVector& row : matrix.rows) {
    nlohmann::json values = nlohmann::json::array();
    for (const FeatureValue& v : row.values)
      values.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    rows.push_back({{"domain", row.domain},
                    {"label", row.label ? nlohmann::json(LabelName(*row.label))
                                        : nlohmann::json(nullptr)},
                    {"values", std::move(values)}});
  }
  nlohmann::json catalog = nlohmann::json::array();
  for (const FeatureSpec& spec : matrix.catalog.entries()) {
    catalog.push_back({{"name", spec.name},
                       {"source", FeatureSourceName(spec.source)},
                       {"realtime", spec.realtime_available}});
  }
  return {{"catalog", std::move(catalog)},
          {"catalog_hash", matrix.catalog.Hash()},
          {"rows", std::move(rows)}};
}

FeatureMatrix MatrixFromJson(const nlohmann::json& json) {
  try {
    std::stringstream catalog_text;
    for (const auto& spec : json.at("catalog")) {
      catalog_text << spec.at("name").get<std::string>() << '\t'
                   << spec.at("source").get<std::string>() << '\t'
                   << (spec.at("realtime").get<bool>() ? '1' : '0') << '\n';
    }
    FeatureMatrix matrix{FeatureCatalog::Parse(catalog_text), {}};
    if (json.contains("catalog_hash") &&
        json.at("catalog_hash").get<std::string>() != matrix.catalog.Hash())
      throw InvariantError("matrix catalog hash does not match its catalog");
    for (const auto& row : json.at("rows")) {
      FeatureVector v;
      v.domain = row.at("domain").get<std::string>();
      if (!row.at("label").is_null()) {
        v.label = ParseLabel(row.at("label").get<std::string>());
        if (!v.label)
          throw DataError("matrix row " + v.domain + " has an unknown label");
      }
      for (const auto& value : row.at("values"))
        v.values.push_back(value.is_null() ? FeatureValue() : FeatureValue(value.get<double>()));
      if (v.values.size() != matrix.catalog.size())
        throw InvariantError("matrix row " + v.domain + " has " +
                             std::to_string(v.values.size()) + " values");
      matrix.rows.push_back(std::move(v));
    }
    return matrix;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed feature matrix: ") + e.what());
  }
}

std::string FeatureMatrix::Hash() const { return Sha256Hex(MatrixToJson(*this).dump()); }

FeatureMatrix LoadMatrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open matrix " + path.string());
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("matrix " + path.string() + " is not valid JSON: " + e.what());
  }
  return MatrixFromJson(json);
}

void SaveMatrix(const std::filesystem::path& path, const FeatureMatrix& matrix) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write matrix " + path.string());
  out << MatrixToJson(matrix).dump() << '\n';
}

std::vector<size_t> ResolveFeatureNames(const FeatureCatalog& catalog,
                                        std::span<const std::string> names) {
  std::vector<size_t> out;
  out.reserve(names.size());
  for (const std::string& name : names) {
    auto index = catalog.IndexOf(name);
    if (!index)
      throw InvariantError("feature not in catalog: " + name);
    out.push_back(*index);
  }
  return out;
}

std::vector<std::string> RealtimeSubset(const FeatureCatalog& catalog,
                                        std::span<const std::string> names) {
  std::vector<std::string> out;
  for (const std::string& name : names) {
    auto index = catalog.IndexOf(name);
    if (!index)
      throw InvariantError("feature not in catalog: " + name);
    if (catalog.at(*index).realtime_available)
      out.push_back(name);
  }
  return out;
}

}  // namespace sitelens
