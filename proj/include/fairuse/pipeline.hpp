#pragma once

#include "fairuse/chat_client.hpp"

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fairuse {

struct TopicFlag {
  bool flagged = false;
  std::vector<std::string> entities;  // configured surface forms, by first occurrence
  double confidence = 0.0;            // in [0,1]
  std::string analyzer_id;
};

enum class CopyrightStatus { kCopyrighted, kPublicDomain, kUnknown };

std::string_view to_string(CopyrightStatus status);
std::optional<CopyrightStatus> copyright_status_from(std::string_view name);

struct LookupResult {
  std::string entity;
  CopyrightStatus status = CopyrightStatus::kUnknown;
  std::string source;  // lookup client id, "cache", or a failure note
  std::chrono::system_clock::time_point fetched_at;
  std::chrono::seconds ttl{0};
};

enum class Route { kBase, kCompliant };
std::string_view to_string(Route route);

struct RoutingPolicy {
  bool conservative_unknown = true;  // unknown status routes to the compliant model
  std::string policy_id;             // empty picks a default id from the flags
};

struct RoutingDecision {
  Route route = Route::kBase;
  TopicFlag flag;
  std::vector<LookupResult> lookups;
  std::string policy_id;
};

// --- topic analysis ------------------------------------------------------

class TopicAnalyzer {
 public:
  virtual ~TopicAnalyzer() = default;
  // Throws TransportError when the analyzer backend is unavailable.
  virtual TopicFlag analyze(const std::string& prompt) = 0;
  virtual std::string id() const = 0;
};

// Flags prompts containing any configured entity name as a whole phrase,
// matched over normalized tokens (case and punctuation insensitive).
class KeywordAnalyzer : public TopicAnalyzer {
 public:
  explicit KeywordAnalyzer(std::vector<std::string> entities);
  TopicFlag analyze(const std::string& prompt) override;
  std::string id() const override;

 private:
  std::vector<std::string> entities_;
  std::vector<std::vector<std::string>> entity_tokens_;
};

// Asks a chat endpoint to list referenced works; one entity per reply line,
// "none" for a clean prompt.
class RemoteAnalyzer : public TopicAnalyzer {
 public:
  explicit RemoteAnalyzer(ChatEndpoint endpoint);
  TopicFlag analyze(const std::string& prompt) override;
  std::string id() const override;

 private:
  ChatClient client_;
};

// --- copyright lookup ----------------------------------------------------

class LookupClient {
 public:
  virtual ~LookupClient() = default;
  // Throws (typically TransportError) on backend failure.
  virtual CopyrightStatus lookup(const std::string& entity) = 0;
  virtual std::string id() const = 0;
};

// In-memory table with case-folded keys; unlisted entities resolve to the
// default status. Counts lookups so tests can observe verify-skips.
class StaticTableLookup : public LookupClient {
 public:
  explicit StaticTableLookup(std::map<std::string, CopyrightStatus> table,
                             CopyrightStatus default_status = CopyrightStatus::kUnknown);
  CopyrightStatus lookup(const std::string& entity) override;
  std::string id() const override;
  std::size_t calls() const;

 private:
  std::unordered_map<std::string, CopyrightStatus> table_;
  CopyrightStatus default_status_;
  std::atomic<std::size_t> calls_{0};
};

// JSONL file of {"entity": ..., "status": ...} records.
class FileListLookup : public LookupClient {
 public:
  explicit FileListLookup(const std::filesystem::path& path);
  CopyrightStatus lookup(const std::string& entity) override;
  std::string id() const override;

 private:
  StaticTableLookup table_;
};

// GET {base}/lookup?entity=... expecting {"status": "..."}.
class HttpLookup : public LookupClient {
 public:
  HttpLookup(std::string base_url, std::chrono::milliseconds timeout = std::chrono::seconds(5));
  CopyrightStatus lookup(const std::string& entity) override;
  std::string id() const override;

 private:
  std::string base_url_;
  std::chrono::milliseconds timeout_;
};

// --- status cache --------------------------------------------------------

// Thread-safe TTL cache keyed by case-folded entity. The clock is
// injectable so expiry is testable.
class StatusCache {
 public:
  using Clock = std::function<std::chrono::system_clock::time_point()>;

  explicit StatusCache(std::chrono::seconds ttl = std::chrono::hours(24), Clock clock = {});

  // Fresh entries only; the returned copy carries source = "cache".
  std::optional<LookupResult> get(const std::string& entity) const;
  void put(LookupResult result);

  std::chrono::seconds ttl() const { return ttl_; }
  std::chrono::system_clock::time_point now() const { return clock_(); }
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::chrono::seconds ttl_;
  Clock clock_;
  std::unordered_map<std::string, LookupResult> entries_;
};

// --- pipeline steps ------------------------------------------------------

// Resolves each entity through the cache, then the client. Client failures
// degrade to status unknown with the failure noted in source; nothing is
// thrown per entity. Successful lookups are written back to the cache.
std::vector<LookupResult> verify_copyright(std::span<const std::string> entities,
                                           LookupClient& client, StatusCache& cache);

// Default policy: compliant iff flagged and any lookup is copyrighted, or
// unknown under a conservative policy; base otherwise.
RoutingDecision route(const TopicFlag& flag, std::vector<LookupResult> lookups,
                      const RoutingPolicy& policy);

// --- gateway -------------------------------------------------------------

struct GatewayConfig {
  std::vector<std::string> entities;  // keyword analyzer terms
  RoutingPolicy policy;
  std::chrono::seconds cache_ttl{std::chrono::hours(24)};
  ChatEndpoint base_endpoint;
  ChatEndpoint compliant_endpoint;
  std::size_t max_in_flight = 16;
};

struct GatewayResponse {
  bool ok = false;
  std::string reply;  // set when ok
  std::string error;  // set when not ok
  RoutingDecision decision;
};

// Full request pipeline: analyze, verify (only when flagged), route, then
// forward to the chosen endpoint. Endpoint failure returns ok=false with
// the decision trace preserved; analyzer failure under a conservative
// policy routes compliant.
class Gateway {
 public:
  Gateway(GatewayConfig config, std::unique_ptr<TopicAnalyzer> analyzer,
          std::unique_ptr<LookupClient> lookup, StatusCache::Clock clock = {});

  GatewayResponse handle_request(const std::string& prompt);

  StatusCache& cache() { return cache_; }
  const GatewayConfig& config() const { return config_; }

 private:
  GatewayConfig config_;
  std::unique_ptr<TopicAnalyzer> analyzer_;
  std::unique_ptr<LookupClient> lookup_;
  StatusCache cache_;
  ChatClient base_client_;
  ChatClient compliant_client_;
  std::counting_semaphore<4096> slots_;
};

// Everything needed to build a Gateway from a JSON config file. String
// values support ${VAR} environment interpolation; endpoint auth tokens are
// named by env var, never stored in the file.
struct GatewaySetup {
  GatewayConfig config;
  std::unique_ptr<TopicAnalyzer> analyzer;
  std::unique_ptr<LookupClient> lookup;
};

GatewaySetup load_gateway_config(const std::filesystem::path& path);

}  // namespace fairuse
