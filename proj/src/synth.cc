#include "sitelens/synth.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "sitelens/error.h"
#include "sitelens/features.h"

namespace sitelens {
namespace {

using Q = CalibratedQuantity;

constexpr std::array<std::string_view, kCalibratedQuantityCount> kQuantityNames = {
    "domain_age_days", "ip_age_days",        "ip_change_after_max",
    "connect_duration", "dom_loading",       "html_classes",
    "nodes",            "js_heap_used_bytes", "page_size_bytes",
    "text_size_bytes",  "image_size_bytes",   "js_size_bytes"};

constexpr std::array<std::string_view, kCalibratedQuantityCount> kFeatureNames = {
    "domain_age_days", "IP_age_days",    "IP_change_after_max", "connect_duration",
    "domLoading",      "HTML_classes",   "Nodes",               "JSHeapUsedSize",
    "page_size",       "text_size",      "image_size",          "js_size"};

// 90th percentile of the standard normal.
constexpr double kNormalQuantile90 = 1.2815515655446004;
// Scale of the pre-offset age distribution for zero-inflated classes.
constexpr double kZeroInflatedAgeScale = 365.0;
// Correlation of the log-scale draws for quantities of one object (the
// parts of a page, the durations of an IP history). Below 1 so that ratios
// between them vary from site to site.
constexpr double kCoupling = 0.85;

const Date kCrawlDate = Date(std::chrono::year_month_day{
    std::chrono::year(2021), std::chrono::month(6), std::chrono::day(1)});

// Split of the bytes not covered by image/text/js across the remaining kinds.
constexpr std::pair<ResourceKind, double> kRemainderSplit[] = {
    {ResourceKind::kCss, 0.45},  {ResourceKind::kFont, 0.20},
    {ResourceKind::kVideo, 0.15}, {ResourceKind::kAudio, 0.05},
    {ResourceKind::kOther, 0.15},
};

// Mean number of resource entries per kind (class independent).
constexpr std::array<double, kResourceKindCount> kResourcesPerKind = {
    18.0, 5.0, 12.0, 3.0, 0.5, 0.8, 3.0, 4.0};

constexpr std::array<double, kDomTags.size()> kTagMedians = {
    300, 40, 150, 40, 10, 8, 120, 3, 30, 20, 2, 15, 80, 1, 1, 0.5};

const std::vector<std::string>& GenericThirdPartyHosts() {
  static const std::vector<std::string> hosts = {
      "cdn.jsdelivr.net", "fonts.googleapis.com", "ajax.cloudflare.com",
      "images.unsplash.com", "i0.wp.com", "s3.amazonaws.com",
      "code.jquery.com", "use.typekit.net"};
  return hosts;
}

class Sampler {
 public:
  explicit Sampler(uint64_t seed) : engine_(seed) {}

  double Normal() { return normal_(engine_); }
  double Uniform(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  bool Bernoulli(double p) { return Uniform() < p; }
  int64_t Poisson(double mean) {
    if (mean <= 0.0)
      return 0;
    return std::poisson_distribution<int64_t>(mean)(engine_);
  }
  size_t Index(size_t n) {
    return std::uniform_int_distribution<size_t>(0, n - 1)(engine_);
  }
  // Log-normal with the given median and shape.
  double LogNormal(double median, double shape) {
    return median * std::exp(shape * Normal());
  }
  // Multiplicative factor with median 1 and log-scale kSynthShape whose
  // normal score has correlation kCoupling with |shared|.
  double CoupledFactor(double shared) {
    double own = std::sqrt(1.0 - kCoupling * kCoupling) * Normal();
    return std::exp(kSynthShape * (kCoupling * shared + own));
  }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

int64_t RoundCount(double value) {
  return std::max<int64_t>(0, std::llround(value));
}

double RoundMillis(double value) { return std::round(value * 10.0) / 10.0; }

// Splits |total| bytes into |parts| non-negative integers summing to it.
std::vector<int64_t> SplitBytes(int64_t total, int64_t parts, Sampler& rng) {
  std::vector<double> weights(parts);
  double sum = 0.0;
  for (double& w : weights) {
    w = rng.Uniform(0.2, 1.0);
    sum += w;
  }
  std::vector<int64_t> out(parts);
  int64_t assigned = 0;
  for (int64_t i = 0; i + 1 < parts; ++i) {
    out[i] = static_cast<int64_t>(std::floor(total * weights[i] / sum));
    assigned += out[i];
  }
  out[parts - 1] = total - assigned;
  return out;
}

std::string RandomLetters(Sampler& rng, int n) {
  std::string out;
  for (int i = 0; i < n; ++i)
    out += static_cast<char>('a' + rng.Index(26));
  return out;
}

void GenerateResources(const ClassTargets& t, Sampler& rng, CrawlTelemetry& crawl) {
  const double shared = rng.Normal();
  std::array<int64_t, kResourceKindCount> bytes{};
  bytes[size_t(ResourceKind::kImage)] =
      RoundCount(t.Get(Q::kImageSizeBytes) * rng.CoupledFactor(shared));
  bytes[size_t(ResourceKind::kText)] =
      RoundCount(t.Get(Q::kTextSizeBytes) * rng.CoupledFactor(shared));
  bytes[size_t(ResourceKind::kJs)] = RoundCount(t.Get(Q::kJsSizeBytes) * rng.CoupledFactor(shared));
  double remainder = std::max(0.0, t.Get(Q::kPageSizeBytes) - t.Get(Q::kImageSizeBytes) -
                                       t.Get(Q::kTextSizeBytes) - t.Get(Q::kJsSizeBytes));
  for (auto [kind, share] : kRemainderSplit)
    bytes[size_t(kind)] = RoundCount(remainder * share * rng.CoupledFactor(shared));

  for (int k = 0; k < kResourceKindCount; ++k) {
    int64_t entries = rng.Poisson(kResourcesPerKind[k]);
    if (bytes[k] > 0)
      entries = std::max<int64_t>(entries, 1);
    if (entries == 0)
      continue;
    for (int64_t size : SplitBytes(bytes[k], entries, rng))
      crawl.resources.push_back({ResourceKind(k), size});
  }
}

void GenerateTimings(const ClassTargets& t, Sampler& rng, TimingProfile& timings) {
  using TM = TimingMark;
  // Drawn unconditionally so that the random stream does not depend on
  // which marks end up absent.
  double connect = t.Get(Q::kConnectDuration) * std::exp(kSynthShape * rng.Normal());
  double dom_loading = t.Get(Q::kDomLoading) * std::exp(kSynthShape * rng.Normal());
  double fetch = rng.LogNormal(5.0, 0.5);
  double lookup_start = fetch + rng.LogNormal(2.0, 0.5);
  double lookup_end = lookup_start + rng.LogNormal(20.0, 0.8);
  double connect_start = lookup_end;
  double connect_end = connect_start + connect;
  double secure_start = connect_start + connect * rng.Uniform(0.3, 0.7);
  double request_start = connect_end + rng.LogNormal(2.0, 0.5);
  double response_start = request_start + rng.LogNormal(150.0, 0.6);
  double response_end = response_start + rng.LogNormal(50.0, 0.8);
  double dom_interactive = dom_loading + rng.LogNormal(400.0, 0.6);
  double dcl_start = dom_interactive + rng.LogNormal(5.0, 0.5);
  double dcl_end = dcl_start + rng.LogNormal(20.0, 0.8);
  double dom_complete = dcl_end + rng.LogNormal(800.0, 0.6);
  double load_start = dom_complete + rng.LogNormal(2.0, 0.5);
  double load_end = load_start + rng.LogNormal(10.0, 0.8);
  double fmp = dom_loading + rng.LogNormal(300.0, 0.6);
  bool capture_failed = rng.Bernoulli(0.01);
  bool plain_http = rng.Bernoulli(0.1);
  bool no_paint = rng.Bernoulli(0.05);
  if (capture_failed)
    return;

  timings.Set(TM::kFetchStart, RoundMillis(fetch));
  timings.Set(TM::kDomainLookupStart, RoundMillis(lookup_start));
  timings.Set(TM::kDomainLookupEnd, RoundMillis(lookup_end));
  timings.Set(TM::kConnectStart, RoundMillis(connect_start));
  timings.Set(TM::kConnectEnd, RoundMillis(connect_start) + RoundMillis(connect));
  if (!plain_http)
    timings.Set(TM::kSecureConnectionStart, RoundMillis(secure_start));
  timings.Set(TM::kRequestStart, RoundMillis(request_start));
  timings.Set(TM::kResponseStart, RoundMillis(response_start));
  timings.Set(TM::kResponseEnd, RoundMillis(response_end));
  timings.Set(TM::kDomLoading, RoundMillis(dom_loading));
  timings.Set(TM::kDomInteractive, RoundMillis(dom_interactive));
  timings.Set(TM::kDomContentLoadedEventStart, RoundMillis(dcl_start));
  timings.Set(TM::kDomContentLoadedEventEnd, RoundMillis(dcl_end));
  timings.Set(TM::kDomComplete, RoundMillis(dom_complete));
  timings.Set(TM::kLoadEventStart, RoundMillis(load_start));
  timings.Set(TM::kLoadEventEnd, RoundMillis(load_end));
  if (!no_paint)
    timings.Set(TM::kFirstMeaningfulPaint, RoundMillis(fmp));
}

void GenerateTraffic(const std::string& domain, Sampler& rng, CrawlTelemetry& crawl) {
  const CategoryList& categories = CategoryList::Default();
  const auto& generic = GenericThirdPartyHosts();
  int64_t count = 20 + RoundCount(rng.LogNormal(60.0, 0.6));

  int64_t chain = rng.Bernoulli(0.3) ? 1 + static_cast<int64_t>(rng.Index(3)) : 0;
  for (int64_t i = 0; i < count; ++i) {
    HttpTransaction tx;
    std::string host;
    if (i <= chain) {
      host = (i % 2 == 0) ? domain : "www." + domain;
      tx.third_party = false;
    } else {
      double roll = rng.Uniform();
      if (roll < 0.45) {
        host = rng.Bernoulli(0.5) ? "static." + domain : domain;
        tx.third_party = false;
      } else if (roll < 0.70) {
        const auto& entry = categories.entries()[rng.Index(categories.entries().size())];
        host = rng.Bernoulli(0.5) ? entry.first : "stats." + entry.first;
        tx.third_party = true;
      } else {
        host = generic[rng.Index(generic.size())];
        tx.third_party = true;
      }
    }
    tx.url = "https://" + host + "/r" + std::to_string(i);
    tx.tracker_category = categories.Match(host);

    if (i < chain) {
      tx.status_code = rng.Bernoulli(0.7) ? 301 : 302;
    } else {
      double roll = rng.Uniform();
      tx.status_code = roll < 0.85   ? 200
                       : roll < 0.90 ? 304
                       : roll < 0.93 ? 204
                       : roll < 0.97 ? 404
                       : roll < 0.99 ? 500
                                     : 302;
    }
    tx.is_redirect = tx.status_code >= 300 && tx.status_code < 400 && tx.status_code != 304;
    crawl.transactions.push_back(std::move(tx));
  }

  int64_t cookies = RoundCount(rng.LogNormal(12.0, 0.7));
  for (int64_t i = 0; i < cookies; ++i) {
    CookieEntry cookie;
    cookie.first_party = rng.Bernoulli(0.4);
    cookie.name = "c" + std::to_string(i) + "_" + RandomLetters(rng, 4);
    if (cookie.first_party) {
      cookie.domain = domain;
    } else {
      const auto& entry = categories.entries()[rng.Index(categories.entries().size())];
      cookie.domain = entry.first;
    }
    crawl.cookies.push_back(std::move(cookie));
  }
}

void GenerateHistory(const ClassTargets& t, Sampler& rng, HistoryRecord& history) {
  double age_draw = rng.Normal();
  int64_t age;
  if (t.Get(Q::kDomainAgeDays) <= 0.0) {
    // Zero-inflated: max(0, X - offset) with P(X <= offset) = kFakeZeroAgeShare.
    double offset = kZeroInflatedAgeScale * std::exp(kSynthShape * kNormalQuantile90);
    age = RoundCount(kZeroInflatedAgeScale * std::exp(kSynthShape * age_draw) - offset);
  } else {
    age = RoundCount(t.Get(Q::kDomainAgeDays) * std::exp(kSynthShape * age_draw));
  }
  history.domain_age_days = age;
  history.domain_birth = kCrawlDate - std::chrono::days(age);

  // One long-held IP plus n - 1 equal shorter ones, with n the smallest
  // count (at least three) that keeps the mean on target.
  const double shared = rng.Normal();
  int64_t longest =
      std::max<int64_t>(1, RoundCount(t.Get(Q::kIpChangeAfterMax) * rng.CoupledFactor(shared)));
  double mean = std::max(1.0, t.Get(Q::kIpAgeDays) * rng.CoupledFactor(shared));
  mean = std::min(mean, static_cast<double>(longest));
  int64_t n = std::max<int64_t>(3, static_cast<int64_t>(std::ceil(longest / mean)) + 1);
  int64_t shorter = std::clamp<int64_t>(
      RoundCount((static_cast<double>(n) * mean - static_cast<double>(longest)) /
                 static_cast<double>(n - 1)),
      0, longest);
  std::vector<int64_t> durations(static_cast<size_t>(n), shorter);
  durations[0] = longest;
  std::shuffle(durations.begin(), durations.end(), rng.engine());

  std::set<std::string> used_ips;
  Date end = kCrawlDate;
  std::vector<IpAssignment> assignments;
  for (int64_t days : durations) {
    std::string ip;
    do {
      ip = std::to_string(1 + rng.Index(223)) + "." + std::to_string(rng.Index(256)) + "." +
           std::to_string(rng.Index(256)) + "." + std::to_string(1 + rng.Index(254));
    } while (!used_ips.insert(ip).second);
    Date start = end - std::chrono::days(days);
    assignments.push_back({ip, start, end});
    end = start - std::chrono::days(1);
  }
  std::reverse(assignments.begin(), assignments.end());
  history.ip_assignments = std::move(assignments);

  history.park_count = rng.Poisson(0.3);
  history.reregistration_count = rng.Poisson(0.2);
  history.coowned_site_count = RoundCount(std::floor(rng.LogNormal(4.0, 1.0)));
  history.coowned_analytics_site_count =
      std::binomial_distribution<int64_t>(history.coowned_site_count, 0.3)(rng.engine());
}

WebsiteRecord GenerateRecord(size_t index, SiteLabel label, const ClassTargets& t,
                             Sampler& rng) {
  static constexpr std::string_view kTlds[] = {"com", "net", "org", "news", "info"};
  WebsiteRecord record;
  record.domain = RandomLetters(rng, 6) + "-" + std::to_string(index) + "." +
                  std::string(kTlds[rng.Index(std::size(kTlds))]);
  record.label = label;

  CrawlTelemetry& crawl = record.crawl;
  DomSnapshotStats& dom = crawl.dom_stats;
  dom.node_count = RoundCount(t.Get(Q::kNodes) * std::exp(kSynthShape * rng.Normal()));
  dom.html_class_count =
      RoundCount(t.Get(Q::kHtmlClasses) * std::exp(kSynthShape * rng.Normal()));
  dom.layout_object_count = RoundCount(dom.node_count * rng.Uniform(0.55, 0.85));
  for (size_t i = 0; i < kDomTags.size(); ++i) {
    dom.element_counts[std::string(kDomTags[i])] =
        RoundCount(std::floor(rng.LogNormal(kTagMedians[i], 0.6) + 0.5));
  }

  crawl.js_heap_used_bytes =
      RoundCount(t.Get(Q::kJsHeapUsedBytes) * std::exp(kSynthShape * rng.Normal()));
  crawl.js_heap_total_bytes =
      crawl.js_heap_used_bytes + RoundCount(crawl.js_heap_used_bytes * rng.LogNormal(0.35, 0.5));
  crawl.frame_count = RoundCount(std::floor(rng.LogNormal(3.0, 0.8)));
  crawl.js_event_listener_count = RoundCount(rng.LogNormal(400.0, 0.8));
  crawl.beacon_pixel_count = RoundCount(std::floor(rng.LogNormal(2.0, 1.0)));

  GenerateResources(t, rng, crawl);
  GenerateTimings(t, rng, crawl.timings);
  GenerateTraffic(record.domain, rng, crawl);
  GenerateHistory(t, rng, record.history);
  return record;
}

ClassTargets TargetsFromJson(const nlohmann::json& json, ClassTargets base) {
  for (auto it = json.begin(); it != json.end(); ++it) {
    auto pos = std::find(kQuantityNames.begin(), kQuantityNames.end(), it.key());
    if (pos == kQuantityNames.end())
      throw DataError("synth config: unknown calibrated quantity " + it.key());
    if (!it->is_number() || it->get<double>() < 0.0)
      throw DataError("synth config: median for " + it.key() + " must be a non-negative number");
    base.median[pos - kQuantityNames.begin()] = it->get<double>();
  }
  return base;
}

nlohmann::json TargetsToJson(const ClassTargets& targets) {
  nlohmann::json out = nlohmann::json::object();
  for (int i = 0; i < kCalibratedQuantityCount; ++i)
    out[std::string(kQuantityNames[i])] = targets.median[i];
  return out;
}

}  // namespace

std::string_view CalibratedQuantityName(CalibratedQuantity quantity) {
  return kQuantityNames[static_cast<size_t>(quantity)];
}

std::string_view CalibratedFeatureName(CalibratedQuantity quantity) {
  return kFeatureNames[static_cast<size_t>(quantity)];
}

ClassTargets DefaultRealTargets() {
  ClassTargets t;
  t.Set(Q::kDomainAgeDays, 6197.0);
  t.Set(Q::kIpAgeDays, 1148.0);
  t.Set(Q::kIpChangeAfterMax, 2857.0);
  t.Set(Q::kConnectDuration, 105.5);
  t.Set(Q::kDomLoading, 1306.0);
  t.Set(Q::kHtmlClasses, 638.0);
  t.Set(Q::kNodes, 3760.0);
  t.Set(Q::kJsHeapUsedBytes, 12.03e6);
  t.Set(Q::kPageSizeBytes, 2.31e6);
  t.Set(Q::kTextSizeBytes, 332.42e3);
  t.Set(Q::kImageSizeBytes, 926e3);
  t.Set(Q::kJsSizeBytes, 680.63e3);
  return t;
}

ClassTargets DefaultFakeTargets() {
  ClassTargets t;
  t.Set(Q::kDomainAgeDays, 0.0);
  t.Set(Q::kIpAgeDays, 815.5);
  t.Set(Q::kIpChangeAfterMax, 1890.0);
  t.Set(Q::kConnectDuration, 98.0);
  t.Set(Q::kDomLoading, 1179.0);
  t.Set(Q::kHtmlClasses, 262.0);
  t.Set(Q::kNodes, 1778.0);
  t.Set(Q::kJsHeapUsedBytes, 6.37e6);
  t.Set(Q::kPageSizeBytes, 1.03e6);
  t.Set(Q::kTextSizeBytes, 154.99e3);
  t.Set(Q::kImageSizeBytes, 402e3);
  t.Set(Q::kJsSizeBytes, 327.8e3);
  return t;
}

SynthConfig SynthConfig::FromJson(const nlohmann::json& json) {
  SynthConfig config;
  try {
    if (json.contains("n_real"))
      config.n_real = json.at("n_real").get<int64_t>();
    if (json.contains("n_fake"))
      config.n_fake = json.at("n_fake").get<int64_t>();
    if (json.contains("seed"))
      config.seed = json.at("seed").get<uint64_t>();
    if (json.contains("real"))
      config.real = TargetsFromJson(json.at("real"), config.real);
    if (json.contains("fake"))
      config.fake = TargetsFromJson(json.at("fake"), config.fake);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed synth config: ") + e.what());
  }
  return config;
}

nlohmann::json SynthConfig::ToJson() const {
  return {{"n_real", n_real},
          {"n_fake", n_fake},
          {"seed", seed},
          {"real", TargetsToJson(real)},
          {"fake", TargetsToJson(fake)}};
}

std::vector<WebsiteRecord> GenerateSynthetic(const SynthConfig& config) {
  if (config.n_real < 1 || config.n_fake < 1)
    throw UsageError("synthetic dataset needs at least one record per class");

  Sampler rng(config.seed);
  std::vector<SiteLabel> labels;
  labels.insert(labels.end(), config.n_real, SiteLabel::kReal);
  labels.insert(labels.end(), config.n_fake, SiteLabel::kFake);
  std::shuffle(labels.begin(), labels.end(), rng.engine());

  std::vector<WebsiteRecord> records;
  records.reserve(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    const ClassTargets& targets = labels[i] == SiteLabel::kReal ? config.real : config.fake;
    records.push_back(GenerateRecord(i, labels[i], targets, rng));
  }
  return records;
}

}  // namespace sitelens
