#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sitelens/telemetry.h"

namespace sitelens {

// The twelve per-class quantities the generator is calibrated against.
enum class CalibratedQuantity {
  kDomainAgeDays,
  kIpAgeDays,          // mean IP assignment duration
  kIpChangeAfterMax,   // longest time a single IP was held
  kConnectDuration,    // connectEnd - connectStart, ms
  kDomLoading,         // ms
  kHtmlClasses,
  kNodes,
  kJsHeapUsedBytes,
  kPageSizeBytes,
  kTextSizeBytes,
  kImageSizeBytes,
  kJsSizeBytes,
};
inline constexpr int kCalibratedQuantityCount = 12;

std::string_view CalibratedQuantityName(CalibratedQuantity quantity);
// Feature catalog name measuring the quantity.
std::string_view CalibratedFeatureName(CalibratedQuantity quantity);

struct ClassTargets {
  std::array<double, kCalibratedQuantityCount> median{};

  double Get(CalibratedQuantity q) const { return median[static_cast<size_t>(q)]; }
  void Set(CalibratedQuantity q, double value) { median[static_cast<size_t>(q)] = value; }
};

// Reference medians observed on crawled real and fake news sites.
ClassTargets DefaultRealTargets();
ClassTargets DefaultFakeTargets();

struct SynthConfig {
  int64_t n_real = 1183;
  int64_t n_fake = 637;
  uint64_t seed = 7;
  ClassTargets real = DefaultRealTargets();
  ClassTargets fake = DefaultFakeTargets();

  // {"n_real", "n_fake", "seed", optional "real"/"fake": {quantity: median}}
  static SynthConfig FromJson(const nlohmann::json& json);
  nlohmann::json ToJson() const;
};

// Log-normal shape parameter shared by every calibrated quantity.
inline constexpr double kSynthShape = 0.75;
// Share of fake-class domains whose age collapses to zero days.
inline constexpr double kFakeZeroAgeShare = 0.9;

// Deterministic in |config|. Records are labeled and interleaved in a
// seeded order. Throws UsageError when a class is empty.
std::vector<WebsiteRecord> GenerateSynthetic(const SynthConfig& config);

}  // namespace sitelens
