#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sitelens/filterlist.h"
#include "sitelens/telemetry.h"

namespace httplib {
class Server;
}

namespace sitelens {

inline constexpr std::string_view kSuperUserRole = "super-user";

struct ServiceConfig {
  std::string bind = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string jwt_secret;
  size_t quorum_threshold = 3;
  size_t delta_retention = 64;
  std::filesystem::path filterlist_path;  // optional; polled for new snapshots
  std::filesystem::path labels_path;      // append-only confirmed labels
  int reload_interval_ms = 1000;

  // Relative paths resolve against |base|. Throws UsageError on a missing
  // secret or out-of-range numbers.
  static ServiceConfig FromJson(const nlohmann::json& json,
                                const std::filesystem::path& base = {});
  static ServiceConfig Load(const std::filesystem::path& path);
};

// Distinct super-user reporters per (domain, label). Thread-safe.
class QuorumState {
 public:
  enum class Outcome { kCounted, kDuplicate, kConfirmed };
  struct Result {
    Outcome outcome = Outcome::kCounted;
    size_t count = 0;
    std::vector<std::string> reporters;  // filled when confirmed
  };

  explicit QuorumState(size_t threshold);

  // Reaching the threshold clears the entry and reports the reporters.
  // |on_confirm| runs under the state lock so confirmations of one key are
  // never interleaved.
  Result Add(const std::string& domain, SiteLabel label, const std::string& reporter,
             const std::function<void(const std::vector<std::string>&)>& on_confirm = {});
  size_t Count(const std::string& domain, SiteLabel label) const;
  size_t threshold() const { return threshold_; }

 private:
  size_t threshold_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, SiteLabel>, std::set<std::string>> pending_;
};

std::string_view QuorumOutcomeName(QuorumState::Outcome outcome);

// Immutable published state: the current list plus retained deltas that
// lead up to it.
class SnapshotHistory {
 public:
  struct Snapshot {
    Filterlist list;
    std::string body;       // canonical JSON
    std::string gzip_body;
  };

  enum class DeltaError { kNoSnapshot, kGone };

  explicit SnapshotHistory(size_t retention);

  // Throws UsageError unless the checkpoint increases.
  void Publish(Filterlist list);
  std::shared_ptr<const Snapshot> Current() const;
  // Composed delta from |since| to the current checkpoint.
  std::variant<Delta, DeltaError> DeltaSince(uint64_t since) const;

 private:
  struct State {
    std::shared_ptr<const Snapshot> current;
    std::deque<std::shared_ptr<const Delta>> deltas;
  };

  std::shared_ptr<const State> Load() const;

  size_t retention_;
  mutable std::mutex mu_;
  std::shared_ptr<const State> state_;
};

class FilterlistService {
 public:
  using Clock = std::function<int64_t()>;  // UTC seconds

  explicit FilterlistService(ServiceConfig config, Clock clock = {});
  ~FilterlistService();
  FilterlistService(const FilterlistService&) = delete;
  FilterlistService& operator=(const FilterlistService&) = delete;

  void Publish(Filterlist list);
  // Publishes config.filterlist_path when its contents changed since the
  // last load. Returns true when a new snapshot went out.
  bool ReloadFromDisk();

  // Binds and serves on background threads. Returns the bound port.
  int Start();
  void Stop();

  const SnapshotHistory& history() const { return history_; }
  const QuorumState& quorum() const { return quorum_; }
  const ServiceConfig& config() const { return config_; }

 private:
  void RegisterRoutes();
  void AppendConfirmedLabel(const std::string& domain, SiteLabel label,
                            const std::vector<std::string>& reporters);

  ServiceConfig config_;
  Clock clock_;
  std::chrono::steady_clock::time_point started_;
  SnapshotHistory history_;
  QuorumState quorum_;
  std::mutex labels_mu_;
  std::mutex reload_mu_;
  std::string loaded_hash_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  std::thread poller_;
  bool stopping_ = false;
  std::mutex stop_mu_;
  std::condition_variable stop_cv_;
};

// Minimal client for the service protocol.
class SyncClient {
 public:
  enum class Path { kFull, kDelta };
  struct Outcome {
    Path path = Path::kFull;
    uint64_t checkpoint = 0;
  };

  SyncClient(std::string host, int port);

  // Throws DataError on transport failure or an unexpected status.
  Filterlist FetchFull() const;
  // nullopt when the server answers 410.
  std::optional<Delta> FetchDelta(uint64_t since) const;
  // Delta sync when |local| holds a list, full fetch otherwise or when the
  // delta is refused or does not apply.
  Outcome Sync(std::optional<Filterlist>& local) const;
  // Returns the HTTP status; |body| receives the response body when given.
  int PostLabel(const std::string& token, const nlohmann::json& report,
                std::string* body = nullptr) const;

 private:
  std::string host_;
  int port_;
};

}  // namespace sitelens
