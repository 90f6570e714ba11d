#pragma once

#include <chrono>
#include <random>
#include <string>
#include <vector>

#include "sitelens/features.h"
#include "sitelens/preprocess.h"
#include "sitelens/telemetry.h"

namespace sitelens::testing {

inline Date MakeDate(int y, unsigned m, unsigned d) {
  return Date(std::chrono::year_month_day{std::chrono::year(y), std::chrono::month(m),
                                          std::chrono::day(d)});
}

// Smallest record that passes validation.
inline WebsiteRecord MinimalRecord(const std::string& domain = "example.com") {
  WebsiteRecord r;
  r.domain = domain;
  r.label = SiteLabel::kReal;
  r.crawl.js_heap_used_bytes = 10;
  r.crawl.js_heap_total_bytes = 20;
  return r;
}

inline HttpTransaction Tx(const std::string& url, int status = 200, bool redirect = false) {
  HttpTransaction t;
  t.url = url;
  t.status_code = status;
  t.is_redirect = redirect;
  return t;
}

inline double FeatureValue(const FeatureVector& v, const std::string& name,
                           const FeatureCatalog& catalog = FeatureCatalog::Default()) {
  auto index = catalog.IndexOf(name);
  if (!index || !v.values.at(*index))
    return std::nan("");
  return *v.values[*index];
}

inline DenseMatrix MatrixFromRows(const std::vector<std::vector<double>>& rows) {
  DenseMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < rows[r].size(); ++c)
      m.at(r, c) = rows[r][c];
  return m;
}

}  // namespace sitelens::testing
