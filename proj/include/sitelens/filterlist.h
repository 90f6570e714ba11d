#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace sitelens {

enum class Verdict { kBlacklisted, kWhitelisted };

std::string_view VerdictName(Verdict verdict);
std::optional<Verdict> ParseVerdict(std::string_view name);

struct FilterEntry {
  std::string domain;
  Verdict verdict = Verdict::kBlacklisted;
  double probability = 0.0;  // probability of the fake class
  int64_t updated_at = 0;    // UTC seconds

  bool operator==(const FilterEntry&) const = default;
};

struct Filterlist {
  uint64_t checkpoint = 0;
  std::vector<FilterEntry> entries;  // strictly ascending by domain bytes

  // Throws InvariantError on unsorted or duplicate domains, unnormalized
  // hostnames or probabilities outside [0, 1].
  void Validate() const;

  bool operator==(const Filterlist&) const = default;
};

// Transforms the list at checkpoint |from| into the one at |to|. An empty
// delta with from == to describes an up-to-date client.
struct Delta {
  uint64_t from = 0;
  uint64_t to = 0;
  std::vector<FilterEntry> upserts;  // ascending by domain
  std::vector<std::string> removals;  // ascending, disjoint from upserts

  bool empty() const { return upserts.empty() && removals.empty(); }
  void Validate() const;

  bool operator==(const Delta&) const = default;
};

struct ListThresholds {
  // Blacklist when P(fake) >= fake.
  double fake = 0.5;
  // Whitelist when P(real) >= real, i.e. P(fake) <= 1 - real.
  double real = 0.9;
};

struct Prediction {
  std::string domain;
  double probability = 0.0;  // of the fake class
};

// Domains are normalized first. Throws UsageError on a duplicate domain, a
// probability outside [0, 1] or overlapping thresholds.
Filterlist BuildList(std::span<const Prediction> predictions, uint64_t checkpoint,
                     int64_t updated_at = 0, const ListThresholds& thresholds = {});

// Binary search. When |comparisons| is given it receives the number of
// domain comparisons made, which never exceeds ceil(log2 n) + 1.
std::optional<Verdict> Lookup(const Filterlist& list, std::string_view domain,
                              size_t* comparisons = nullptr);

// Throws UsageError unless old.checkpoint < updated.checkpoint.
Delta MakeDelta(const Filterlist& old, const Filterlist& updated);
// Throws InvariantError ("stale or future delta") unless
// delta.from == list.checkpoint.
Filterlist ApplyDelta(const Filterlist& list, const Delta& delta);
// Later operations win per domain. Throws UsageError unless
// first.to == second.from.
Delta ComposeDelta(const Delta& first, const Delta& second);

// Canonical forms: sorted keys, no insignificant whitespace.
nlohmann::json ListToJson(const Filterlist& list);
Filterlist ListFromJson(const nlohmann::json& json);
std::string SerializeList(const Filterlist& list);
Filterlist ParseList(std::string_view text);
nlohmann::json DeltaToJson(const Delta& delta);
Delta DeltaFromJson(const nlohmann::json& json);
std::string SerializeDelta(const Delta& delta);
Delta ParseDelta(std::string_view text);

Filterlist LoadList(const std::filesystem::path& path);
// Writes to a temporary sibling and renames it into place.
void SaveList(const std::filesystem::path& path, const Filterlist& list);

std::string GzipCompress(std::string_view data);
// Throws DataError on corrupt input.
std::string GzipDecompress(std::string_view data);

}  // namespace sitelens
