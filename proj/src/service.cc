#include "sitelens/service.h"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "httplib.h"
#include "sitelens/domain_name.h"
#include "sitelens/error.h"
#include "sitelens/hash.h"
#include "sitelens/jwt.h"

namespace sitelens {

ServiceConfig ServiceConfig::FromJson(const nlohmann::json& json,
                                      const std::filesystem::path& base) {
  ServiceConfig c;
  try {
    c.bind = json.value("bind", c.bind);
    c.port = json.value("port", c.port);
    c.jwt_secret = json.at("jwt_secret").get<std::string>();
    c.quorum_threshold = json.value("quorum_threshold", c.quorum_threshold);
    c.delta_retention = json.value("delta_retention", c.delta_retention);
    c.reload_interval_ms = json.value("reload_interval_ms", c.reload_interval_ms);
    auto path_field = [&](const char* key) -> std::filesystem::path {
      if (!json.contains(key))
        return {};
      std::filesystem::path p = json.at(key).get<std::string>();
      return p.is_relative() && !base.empty() ? base / p : p;
    };
    c.filterlist_path = path_field("filterlist_path");
    c.labels_path = path_field("labels_path");
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("bad service config: ") + e.what());
  }
  if (c.jwt_secret.empty())
    throw UsageError("service config needs a non-empty jwt_secret");
  if (c.port < 0 || c.port > 65535)
    throw UsageError("service port out of range");
  if (c.quorum_threshold < 1)
    throw UsageError("quorum_threshold must be at least 1");
  if (c.reload_interval_ms < 10)
    throw UsageError("reload_interval_ms must be at least 10");
  return c;
}

ServiceConfig ServiceConfig::Load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot read " + path.string());
  nlohmann::json json = nlohmann::json::parse(in, nullptr, false);
  if (json.is_discarded())
    throw DataError(path.string() + ": not valid JSON");
  return FromJson(json, path.parent_path());
}

QuorumState::QuorumState(size_t threshold) : threshold_(threshold) {}

QuorumState::Result QuorumState::Add(
    const std::string& domain, SiteLabel label, const std::string& reporter,
    const std::function<void(const std::vector<std::string>&)>& on_confirm) {
  std::lock_guard lock(mu_);
  auto key = std::make_pair(domain, label);
  std::set<std::string>& reporters = pending_[key];
  Result r;
  if (!reporters.insert(reporter).second) {
    r.outcome = Outcome::kDuplicate;
    r.count = reporters.size();
    return r;
  }
  r.count = reporters.size();
  if (reporters.size() < threshold_) {
    r.outcome = Outcome::kCounted;
    return r;
  }
  r.outcome = Outcome::kConfirmed;
  r.reporters.assign(reporters.begin(), reporters.end());
  if (on_confirm)
    on_confirm(r.reporters);
  pending_.erase(key);
  return r;
}

size_t QuorumState::Count(const std::string& domain, SiteLabel label) const {
  std::lock_guard lock(mu_);
  auto it = pending_.find({domain, label});
  return it == pending_.end() ? 0 : it->second.size();
}

std::string_view QuorumOutcomeName(QuorumState::Outcome outcome) {
  switch (outcome) {
    case QuorumState::Outcome::kCounted: return "counted";
    case QuorumState::Outcome::kDuplicate: return "duplicate";
    case QuorumState::Outcome::kConfirmed: return "confirmed";
  }
  return "?";
}

SnapshotHistory::SnapshotHistory(size_t retention)
    : retention_(retention), state_(std::make_shared<State>()) {}

std::shared_ptr<const SnapshotHistory::State> SnapshotHistory::Load() const {
  std::lock_guard lock(mu_);
  return state_;
}

void SnapshotHistory::Publish(Filterlist list) {
  list.Validate();
  auto snapshot = std::make_shared<Snapshot>();
  snapshot->body = SerializeList(list);
  snapshot->gzip_body = GzipCompress(snapshot->body);

  std::lock_guard lock(mu_);
  auto next = std::make_shared<State>(*state_);
  if (state_->current) {
    const Filterlist& previous = state_->current->list;
    if (list.checkpoint <= previous.checkpoint)
      throw UsageError("checkpoint " + std::to_string(list.checkpoint) +
                       " does not advance past " + std::to_string(previous.checkpoint));
    next->deltas.push_back(std::make_shared<const Delta>(MakeDelta(previous, list)));
    while (next->deltas.size() > retention_)
      next->deltas.pop_front();
  }
  snapshot->list = std::move(list);
  next->current = std::move(snapshot);
  state_ = std::move(next);
}

std::shared_ptr<const SnapshotHistory::Snapshot> SnapshotHistory::Current() const {
  return Load()->current;
}

std::variant<Delta, SnapshotHistory::DeltaError> SnapshotHistory::DeltaSince(
    uint64_t since) const {
  std::shared_ptr<const State> state = Load();
  if (!state->current)
    return DeltaError::kNoSnapshot;
  uint64_t now = state->current->list.checkpoint;
  if (since == now)
    return Delta{now, now, {}, {}};
  if (since > now)
    return DeltaError::kGone;
  auto it = std::find_if(state->deltas.begin(), state->deltas.end(),
                         [since](const auto& d) { return d->from == since; });
  if (it == state->deltas.end())
    return DeltaError::kGone;
  Delta composed = **it;
  for (++it; it != state->deltas.end(); ++it)
    composed = ComposeDelta(composed, **it);
  return composed;
}

namespace {

int64_t SystemSeconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

void SendError(httplib::Response& res, int status, std::string_view code,
               const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
  extra["error"] = code;
  extra["message"] = message;
  res.status = status;
  res.set_content(extra.dump(), "application/json");
}

bool AcceptsGzip(const httplib::Request& req) {
  return req.get_header_value("Accept-Encoding").find("gzip") != std::string::npos;
}

void SendBody(const httplib::Request& req, httplib::Response& res, const std::string& body,
              const std::string* gzip_body = nullptr) {
  if (AcceptsGzip(req)) {
    res.set_header("Content-Encoding", "gzip");
    res.set_content(gzip_body ? *gzip_body : GzipCompress(body), "application/json");
  } else {
    res.set_content(body, "application/json");
  }
}

std::optional<uint64_t> ParseCheckpoint(const std::string& text) {
  uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
    return std::nullopt;
  return value;
}

}  // namespace

FilterlistService::FilterlistService(ServiceConfig config, Clock clock)
    : config_(std::move(config)),
      clock_(clock ? std::move(clock) : Clock(SystemSeconds)),
      started_(std::chrono::steady_clock::now()),
      history_(config_.delta_retention),
      quorum_(config_.quorum_threshold) {}

FilterlistService::~FilterlistService() { Stop(); }

void FilterlistService::Publish(Filterlist list) { history_.Publish(std::move(list)); }

bool FilterlistService::ReloadFromDisk() {
  if (config_.filterlist_path.empty())
    return false;
  std::lock_guard lock(reload_mu_);
  std::ifstream in(config_.filterlist_path, std::ios::binary);
  if (!in)
    return false;
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string bytes = buffer.str();
  std::string hash = Sha256Hex(bytes);
  if (hash == loaded_hash_)
    return false;
  try {
    std::string text = bytes.size() >= 2 && static_cast<unsigned char>(bytes[0]) == 0x1f &&
                               static_cast<unsigned char>(bytes[1]) == 0x8b
                           ? GzipDecompress(bytes)
                           : bytes;
    Filterlist list = ParseList(text);
    loaded_hash_ = hash;
    auto current = history_.Current();
    if (current && list.checkpoint <= current->list.checkpoint) {
      std::cerr << "filterlist reload skipped: checkpoint " << list.checkpoint
                << " does not advance past " << current->list.checkpoint << "\n";
      return false;
    }
    history_.Publish(std::move(list));
    return true;
  } catch (const Error& e) {
    std::cerr << "filterlist reload failed: " << e.what() << "\n";
    return false;
  }
}

void FilterlistService::AppendConfirmedLabel(const std::string& domain, SiteLabel label,
                                             const std::vector<std::string>& reporters) {
  if (config_.labels_path.empty())
    return;
  nlohmann::json line = {{"domain", domain},
                         {"label", LabelName(label)},
                         {"reporters", reporters},
                         {"confirmed_at", clock_()}};
  std::lock_guard lock(labels_mu_);
  std::ofstream out(config_.labels_path, std::ios::app | std::ios::binary);
  out << line.dump() << '\n';
  out.flush();
  if (!out)
    throw DataError("cannot append to " + config_.labels_path.string());
}

void FilterlistService::RegisterRoutes() {
  httplib::Server& s = *server_;

  s.Get("/v1/filterlist", [this](const httplib::Request& req, httplib::Response& res) {
    auto snap = history_.Current();
    if (!snap) {
      SendError(res, 503, "no_snapshot", "no filterlist has been published yet");
      return;
    }
    res.set_header("X-Checkpoint", std::to_string(snap->list.checkpoint));
    SendBody(req, res, snap->body, &snap->gzip_body);
  });

  s.Get("/v1/filterlist/delta", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("since")) {
      SendError(res, 400, "bad_request", "missing 'since' query parameter");
      return;
    }
    auto since = ParseCheckpoint(req.get_param_value("since"));
    if (!since) {
      SendError(res, 400, "bad_request", "'since' must be a non-negative integer");
      return;
    }
    auto result = history_.DeltaSince(*since);
    if (auto* err = std::get_if<SnapshotHistory::DeltaError>(&result)) {
      if (*err == SnapshotHistory::DeltaError::kNoSnapshot) {
        SendError(res, 503, "no_snapshot", "no filterlist has been published yet");
      } else {
        auto snap = history_.Current();
        SendError(res, 410, "gone", "checkpoint outside the retained delta range; fetch the full list",
                  {{"checkpoint", snap ? snap->list.checkpoint : 0}});
      }
      return;
    }
    const Delta& delta = std::get<Delta>(result);
    res.set_header("X-Checkpoint", std::to_string(delta.to));
    SendBody(req, res, SerializeDelta(delta));
  });

  s.Post("/v1/labels", [this](const httplib::Request& req, httplib::Response& res) {
    std::string auth = req.get_header_value("Authorization");
    constexpr std::string_view kBearer = "Bearer ";
    if (auth.compare(0, kBearer.size(), kBearer) != 0) {
      SendError(res, 401, "unauthorized", "missing bearer token");
      return;
    }
    JwtVerification v = VerifyJwt(std::string_view(auth).substr(kBearer.size()),
                                  config_.jwt_secret, clock_());
    if (!v.ok()) {
      SendError(res, 401, "unauthorized", std::string("token ") + std::string(JwtStatusName(v.status)));
      return;
    }
    if (v.claims.role != kSuperUserRole) {
      SendError(res, 403, "forbidden", "only super-users may contribute labels");
      return;
    }
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (!body.is_object() || !body.contains("domain") || !body["domain"].is_string() ||
        !body.contains("proposed_label") || !body["proposed_label"].is_string()) {
      SendError(res, 400, "bad_request", "body needs string fields domain and proposed_label");
      return;
    }
    std::string domain = NormalizeDomain(body["domain"].get<std::string>());
    auto label = ParseLabel(body["proposed_label"].get<std::string>());
    if (!IsNormalizedHostname(domain) || !label) {
      SendError(res, 400, "bad_request", "invalid domain or proposed_label");
      return;
    }
    if (body.contains("reporter_id") &&
        (!body["reporter_id"].is_string() || body["reporter_id"] != v.claims.sub)) {
      SendError(res, 400, "bad_request", "reporter_id does not match the token subject");
      return;
    }
    QuorumState::Result r;
    try {
      r = quorum_.Add(domain, *label, v.claims.sub,
                      [&](const std::vector<std::string>& reporters) {
                        AppendConfirmedLabel(domain, *label, reporters);
                      });
    } catch (const Error& e) {
      SendError(res, 500, "storage", e.what());
      return;
    }
    nlohmann::json out = {{"status", QuorumOutcomeName(r.outcome)},
                          {"count", r.count},
                          {"threshold", quorum_.threshold()}};
    res.status = 202;
    res.set_content(out.dump(), "application/json");
  });

  s.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    auto snap = history_.Current();
    double uptime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    nlohmann::json out = {{"status", "ok"}, {"uptime_seconds", uptime}};
    out["checkpoint"] = snap ? nlohmann::json(snap->list.checkpoint) : nlohmann::json(nullptr);
    out["entries"] = snap ? snap->list.entries.size() : 0;
    res.set_content(out.dump(), "application/json");
  });
}

int FilterlistService::Start() {
  if (server_)
    throw UsageError("service already started");
  ReloadFromDisk();
  server_ = std::make_unique<httplib::Server>();
  RegisterRoutes();
  int port = config_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(config_.bind);
    if (port < 0)
      throw DataError("cannot bind " + config_.bind);
  } else if (!server_->bind_to_port(config_.bind, port)) {
    throw DataError("cannot bind " + config_.bind + ":" + std::to_string(port));
  }
  {
    std::lock_guard lock(stop_mu_);
    stopping_ = false;
  }
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  if (!config_.filterlist_path.empty()) {
    poller_ = std::thread([this] {
      std::unique_lock lock(stop_mu_);
      while (!stop_cv_.wait_for(lock, std::chrono::milliseconds(config_.reload_interval_ms),
                                [this] { return stopping_; })) {
        lock.unlock();
        ReloadFromDisk();
        lock.lock();
      }
    });
  }
  return port;
}

void FilterlistService::Stop() {
  {
    std::lock_guard lock(stop_mu_);
    stopping_ = true;
  }
  stop_cv_.notify_all();
  if (server_)
    server_->stop();
  if (listener_.joinable())
    listener_.join();
  if (poller_.joinable())
    poller_.join();
  server_.reset();
}

SyncClient::SyncClient(std::string host, int port) : host_(std::move(host)), port_(port) {}

namespace {

std::string BodyOf(const httplib::Result& res) {
  if (res->get_header_value("Content-Encoding") == "gzip")
    return GzipDecompress(res->body);
  return res->body;
}

httplib::Client MakeClient(const std::string& host, int port) {
  httplib::Client cli(host, port);
  cli.set_decompress(false);
  cli.set_connection_timeout(std::chrono::seconds(5));
  cli.set_read_timeout(std::chrono::seconds(30));
  return cli;
}

}  // namespace

Filterlist SyncClient::FetchFull() const {
  httplib::Client cli = MakeClient(host_, port_);
  auto res = cli.Get("/v1/filterlist", {{"Accept-Encoding", "gzip"}});
  if (!res)
    throw DataError("filterlist fetch failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw DataError("filterlist fetch returned " + std::to_string(res->status) + ": " + res->body);
  return ParseList(BodyOf(res));
}

std::optional<Delta> SyncClient::FetchDelta(uint64_t since) const {
  httplib::Client cli = MakeClient(host_, port_);
  auto res = cli.Get("/v1/filterlist/delta?since=" + std::to_string(since),
                     {{"Accept-Encoding", "gzip"}});
  if (!res)
    throw DataError("delta fetch failed: " + httplib::to_string(res.error()));
  if (res->status == 410)
    return std::nullopt;
  if (res->status != 200)
    throw DataError("delta fetch returned " + std::to_string(res->status) + ": " + res->body);
  return ParseDelta(BodyOf(res));
}

SyncClient::Outcome SyncClient::Sync(std::optional<Filterlist>& local) const {
  if (local) {
    std::optional<Delta> delta = FetchDelta(local->checkpoint);
    if (delta) {
      try {
        local = ApplyDelta(*local, *delta);
        return {Path::kDelta, local->checkpoint};
      } catch (const Error&) {
        // Fall through to a full fetch.
      }
    }
  }
  local = FetchFull();
  return {Path::kFull, local->checkpoint};
}

int SyncClient::PostLabel(const std::string& token, const nlohmann::json& report,
                          std::string* body) const {
  httplib::Client cli = MakeClient(host_, port_);
  auto res = cli.Post("/v1/labels", {{"Authorization", "Bearer " + token}}, report.dump(),
                      "application/json");
  if (!res)
    throw DataError("label post failed: " + httplib::to_string(res.error()));
  if (body)
    *body = res->body;
  return res->status;
}

}  // namespace sitelens
