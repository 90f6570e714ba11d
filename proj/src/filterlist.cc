#include "sitelens/filterlist.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <zlib.h>

#include "sitelens/domain_name.h"
#include "sitelens/error.h"

namespace sitelens {

std::string_view VerdictName(Verdict verdict) {
  return verdict == Verdict::kBlacklisted ? "blacklisted" : "whitelisted";
}

std::optional<Verdict> ParseVerdict(std::string_view name) {
  if (name == "blacklisted")
    return Verdict::kBlacklisted;
  if (name == "whitelisted")
    return Verdict::kWhitelisted;
  return std::nullopt;
}

namespace {

void ValidateEntry(const FilterEntry& e) {
  if (!IsNormalizedHostname(e.domain))
    throw InvariantError("not a normalized hostname: '" + e.domain + "'");
  if (!(e.probability >= 0.0 && e.probability <= 1.0))
    throw InvariantError("probability outside [0, 1] for " + e.domain);
}

template <typename T, typename Key>
void RequireStrictlySorted(const std::vector<T>& items, Key key, const char* what) {
  for (size_t i = 1; i < items.size(); ++i) {
    if (!(key(items[i - 1]) < key(items[i])))
      throw InvariantError(std::string(what) + " not strictly sorted at '" + key(items[i]) + "'");
  }
}

const std::string& DomainOf(const FilterEntry& e) { return e.domain; }
const std::string& Self(const std::string& s) { return s; }

}  // namespace

void Filterlist::Validate() const {
  for (const FilterEntry& e : entries)
    ValidateEntry(e);
  RequireStrictlySorted(entries, DomainOf, "filterlist entries");
}

void Delta::Validate() const {
  if (from > to)
    throw InvariantError("delta runs backwards: " + std::to_string(from) + " -> " +
                         std::to_string(to));
  if (from == to && !empty())
    throw InvariantError("non-empty delta must advance the checkpoint");
  for (const FilterEntry& e : upserts)
    ValidateEntry(e);
  RequireStrictlySorted(upserts, DomainOf, "delta upserts");
  RequireStrictlySorted(removals, Self, "delta removals");
  for (const std::string& d : removals) {
    if (!IsNormalizedHostname(d))
      throw InvariantError("not a normalized hostname: '" + d + "'");
  }
  size_t i = 0, j = 0;
  while (i < upserts.size() && j < removals.size()) {
    if (upserts[i].domain == removals[j])
      throw InvariantError("domain both upserted and removed: " + removals[j]);
    upserts[i].domain < removals[j] ? ++i : ++j;
  }
}

Filterlist BuildList(std::span<const Prediction> predictions, uint64_t checkpoint,
                     int64_t updated_at, const ListThresholds& thresholds) {
  if (1.0 - thresholds.real >= thresholds.fake)
    throw UsageError("whitelist and blacklist thresholds overlap");
  Filterlist list;
  list.checkpoint = checkpoint;
  std::set<std::string> seen;
  for (const Prediction& p : predictions) {
    std::string domain = NormalizeDomain(p.domain);
    if (!seen.insert(domain).second)
      throw UsageError("duplicate domain in predictions: " + domain);
    if (!(p.probability >= 0.0 && p.probability <= 1.0))
      throw UsageError("probability outside [0, 1] for " + domain);
    if (p.probability >= thresholds.fake)
      list.entries.push_back({domain, Verdict::kBlacklisted, p.probability, updated_at});
    else if (1.0 - p.probability >= thresholds.real)
      list.entries.push_back({domain, Verdict::kWhitelisted, p.probability, updated_at});
  }
  std::sort(list.entries.begin(), list.entries.end(),
            [](const FilterEntry& a, const FilterEntry& b) { return a.domain < b.domain; });
  list.Validate();
  return list;
}

std::optional<Verdict> Lookup(const Filterlist& list, std::string_view domain,
                              size_t* comparisons) {
  size_t count = 0;
  size_t lo = 0, hi = list.entries.size();
  std::optional<Verdict> found;
  while (lo < hi) {
    size_t mid = lo + (hi - lo) / 2;
    int c = std::string_view(list.entries[mid].domain).compare(domain);
    ++count;
    if (c == 0) {
      found = list.entries[mid].verdict;
      break;
    }
    if (c < 0)
      lo = mid + 1;
    else
      hi = mid;
  }
  if (comparisons)
    *comparisons = count;
  return found;
}

Delta MakeDelta(const Filterlist& old, const Filterlist& updated) {
  if (old.checkpoint >= updated.checkpoint)
    throw UsageError("delta needs old checkpoint " + std::to_string(old.checkpoint) +
                     " below new checkpoint " + std::to_string(updated.checkpoint));
  Delta d;
  d.from = old.checkpoint;
  d.to = updated.checkpoint;
  size_t i = 0, j = 0;
  const auto& a = old.entries;
  const auto& b = updated.entries;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].domain < b[j].domain)) {
      d.removals.push_back(a[i++].domain);
    } else if (i == a.size() || b[j].domain < a[i].domain) {
      d.upserts.push_back(b[j++]);
    } else {
      if (!(a[i] == b[j]))
        d.upserts.push_back(b[j]);
      ++i;
      ++j;
    }
  }
  return d;
}

Filterlist ApplyDelta(const Filterlist& list, const Delta& delta) {
  if (delta.from != list.checkpoint)
    throw InvariantError("stale or future delta: list is at " + std::to_string(list.checkpoint) +
                         ", delta starts at " + std::to_string(delta.from));
  delta.Validate();
  Filterlist out;
  out.checkpoint = delta.to;
  out.entries.reserve(list.entries.size() + delta.upserts.size());
  size_t u = 0, r = 0;
  for (const FilterEntry& e : list.entries) {
    while (u < delta.upserts.size() && delta.upserts[u].domain < e.domain)
      out.entries.push_back(delta.upserts[u++]);
    while (r < delta.removals.size() && delta.removals[r] < e.domain)
      ++r;
    if (u < delta.upserts.size() && delta.upserts[u].domain == e.domain) {
      out.entries.push_back(delta.upserts[u++]);
    } else if (r < delta.removals.size() && delta.removals[r] == e.domain) {
      ++r;
    } else {
      out.entries.push_back(e);
    }
  }
  while (u < delta.upserts.size())
    out.entries.push_back(delta.upserts[u++]);
  return out;
}

Delta ComposeDelta(const Delta& first, const Delta& second) {
  if (first.to != second.from)
    throw UsageError("deltas are not adjacent: " + std::to_string(first.to) + " vs " +
                     std::to_string(second.from));
  // nullopt marks a removal.
  std::map<std::string, std::optional<FilterEntry>> ops;
  for (const Delta* d : {&first, &second}) {
    for (const FilterEntry& e : d->upserts)
      ops[e.domain] = e;
    for (const std::string& domain : d->removals)
      ops[domain] = std::nullopt;
  }
  Delta out;
  out.from = first.from;
  out.to = second.to;
  for (auto& [domain, op] : ops) {
    if (op)
      out.upserts.push_back(std::move(*op));
    else
      out.removals.push_back(domain);
  }
  return out;
}

namespace {

nlohmann::json EntryToJson(const FilterEntry& e) {
  return {{"domain", e.domain},
          {"verdict", VerdictName(e.verdict)},
          {"probability", e.probability},
          {"updated_at", e.updated_at}};
}

FilterEntry EntryFromJson(const nlohmann::json& j) {
  FilterEntry e;
  e.domain = j.at("domain").get<std::string>();
  std::string verdict = j.at("verdict").get<std::string>();
  auto v = ParseVerdict(verdict);
  if (!v)
    throw DataError("unknown verdict '" + verdict + "' for " + e.domain);
  e.verdict = *v;
  e.probability = j.at("probability").get<double>();
  e.updated_at = j.at("updated_at").get<int64_t>();
  return e;
}

nlohmann::json ParseJson(std::string_view text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed ") + what + ": " + e.what());
  }
}

}  // namespace

nlohmann::json ListToJson(const Filterlist& list) {
  nlohmann::json entries = nlohmann::json::array();
  for (const FilterEntry& e : list.entries)
    entries.push_back(EntryToJson(e));
  return {{"checkpoint", list.checkpoint}, {"entries", entries}};
}

Filterlist ListFromJson(const nlohmann::json& json) {
  Filterlist list;
  try {
    list.checkpoint = json.at("checkpoint").get<uint64_t>();
    for (const auto& e : json.at("entries"))
      list.entries.push_back(EntryFromJson(e));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed filterlist: ") + e.what());
  }
  list.Validate();
  return list;
}

std::string SerializeList(const Filterlist& list) { return ListToJson(list).dump(); }

Filterlist ParseList(std::string_view text) {
  return ListFromJson(ParseJson(text, "filterlist"));
}

nlohmann::json DeltaToJson(const Delta& delta) {
  nlohmann::json upserts = nlohmann::json::array();
  for (const FilterEntry& e : delta.upserts)
    upserts.push_back(EntryToJson(e));
  return {{"from", delta.from},
          {"to", delta.to},
          {"upserts", upserts},
          {"removals", delta.removals}};
}

Delta DeltaFromJson(const nlohmann::json& json) {
  Delta d;
  try {
    d.from = json.at("from").get<uint64_t>();
    d.to = json.at("to").get<uint64_t>();
    for (const auto& e : json.at("upserts"))
      d.upserts.push_back(EntryFromJson(e));
    d.removals = json.at("removals").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed delta: ") + e.what());
  }
  d.Validate();
  return d;
}

std::string SerializeDelta(const Delta& delta) { return DeltaToJson(delta).dump(); }

Delta ParseDelta(std::string_view text) { return DeltaFromJson(ParseJson(text, "delta")); }

Filterlist LoadList(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  if (text.size() >= 2 && static_cast<unsigned char>(text[0]) == 0x1f &&
      static_cast<unsigned char>(text[1]) == 0x8b)
    text = GzipDecompress(text);
  return ParseList(text);
}

void SaveList(const std::filesystem::path& path, const Filterlist& list) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw DataError("cannot write " + tmp.string());
    out << SerializeList(list);
    if (!out)
      throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string GzipCompress(std::string_view data) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw InvariantError("deflateInit2 failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buffer[16384];
  int rc;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buffer);
    zs.avail_out = sizeof(buffer);
    rc = deflate(&zs, Z_FINISH);
    out.append(buffer, sizeof(buffer) - zs.avail_out);
  } while (rc == Z_OK);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END)
    throw InvariantError("gzip compression failed");
  return out;
}

std::string GzipDecompress(std::string_view data) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK)
    throw InvariantError("inflateInit2 failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  zs.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buffer[16384];
  int rc;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(buffer);
    zs.avail_out = sizeof(buffer);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw DataError("corrupt gzip stream");
    }
    out.append(buffer, sizeof(buffer) - zs.avail_out);
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw DataError("truncated gzip stream");
    }
  } while (rc != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

}  // namespace sitelens
