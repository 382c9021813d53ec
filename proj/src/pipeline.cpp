#include "fairuse/pipeline.hpp"

#include "fairuse/errors.hpp"
#include "fairuse/textcorpus.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace fairuse {

namespace {

using json = nlohmann::json;

// Case, punctuation, and whitespace insensitive key for entity identity.
std::string fold_entity(const std::string& entity) { return normalize(entity, NormalizationConfig{}); }

std::vector<std::string> entity_words(const std::string& entity) {
  return tokenize(entity, NormalizationConfig{}).tokens;
}

bool phrase_at(const std::vector<std::string>& haystack, std::size_t pos,
               const std::vector<std::string>& phrase) {
  if (pos + phrase.size() > haystack.size()) return false;
  for (std::size_t i = 0; i < phrase.size(); ++i) {
    if (haystack[pos + i] != phrase[i]) return false;
  }
  return true;
}

// First token position of the phrase, or npos.
std::size_t find_phrase(const std::vector<std::string>& haystack,
                        const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > haystack.size()) return std::string::npos;
  for (std::size_t pos = 0; pos + phrase.size() <= haystack.size(); ++pos) {
    if (phrase_at(haystack, pos, phrase)) return pos;
  }
  return std::string::npos;
}

std::string trim_copy(const std::string& text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin])) != 0) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1])) != 0) --end;
  return text.substr(begin, end - begin);
}

}  // namespace

std::string_view to_string(CopyrightStatus status) {
  switch (status) {
    case CopyrightStatus::kCopyrighted: return "copyrighted";
    case CopyrightStatus::kPublicDomain: return "public_domain";
    case CopyrightStatus::kUnknown: return "unknown";
  }
  return "unknown";
}

std::optional<CopyrightStatus> copyright_status_from(std::string_view name) {
  if (name == "copyrighted") return CopyrightStatus::kCopyrighted;
  if (name == "public_domain") return CopyrightStatus::kPublicDomain;
  if (name == "unknown") return CopyrightStatus::kUnknown;
  return std::nullopt;
}

std::string_view to_string(Route route) {
  return route == Route::kCompliant ? "compliant" : "base";
}

// --- KeywordAnalyzer -----------------------------------------------------

KeywordAnalyzer::KeywordAnalyzer(std::vector<std::string> entities) {
  std::vector<std::string> seen;
  for (auto& entity : entities) {
    auto words = entity_words(entity);
    if (words.empty()) continue;
    const std::string key = fold_entity(entity);
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    entities_.push_back(std::move(entity));
    entity_tokens_.push_back(std::move(words));
  }
}

TopicFlag KeywordAnalyzer::analyze(const std::string& prompt) {
  TopicFlag flag;
  flag.analyzer_id = id();
  const auto prompt_tokens = tokenize(prompt, NormalizationConfig{}).tokens;
  std::vector<std::pair<std::size_t, std::size_t>> found;  // (token pos, entity index)
  for (std::size_t i = 0; i < entity_tokens_.size(); ++i) {
    const std::size_t pos = find_phrase(prompt_tokens, entity_tokens_[i]);
    if (pos != std::string::npos) found.emplace_back(pos, i);
  }
  std::sort(found.begin(), found.end());
  for (const auto& [pos, i] : found) flag.entities.push_back(entities_[i]);
  flag.flagged = !flag.entities.empty();
  flag.confidence = flag.flagged ? 1.0 : 0.0;
  return flag;
}

std::string KeywordAnalyzer::id() const { return "keyword-v1"; }

// --- RemoteAnalyzer ------------------------------------------------------

RemoteAnalyzer::RemoteAnalyzer(ChatEndpoint endpoint) : client_(std::move(endpoint)) {}

TopicFlag RemoteAnalyzer::analyze(const std::string& prompt) {
  TopicFlag flag;
  flag.analyzer_id = id();
  const std::string instruction =
      "List the titles of creative works or the names of their authors that the text "
      "below refers to. Reply with one name per line. If there are none, reply with "
      "the single word none.\n\nText:\n" +
      prompt;
  const std::string reply = client_.complete({{"user", instruction}});
  std::istringstream lines(reply);
  std::string line;
  while (std::getline(lines, line)) {
    std::string name = trim_copy(line);
    if (name.rfind("- ", 0) == 0) name = trim_copy(name.substr(2));
    if (name.empty()) continue;
    if (normalize(name, NormalizationConfig{}) == "none") continue;
    flag.entities.push_back(std::move(name));
  }
  flag.flagged = !flag.entities.empty();
  flag.confidence = flag.flagged ? 1.0 : 0.0;
  return flag;
}

std::string RemoteAnalyzer::id() const { return "remote-analyzer-v1"; }

// --- lookup clients ------------------------------------------------------

StaticTableLookup::StaticTableLookup(std::map<std::string, CopyrightStatus> table,
                                     CopyrightStatus default_status)
    : default_status_(default_status) {
  for (const auto& [entity, status] : table) table_[fold_entity(entity)] = status;
}

CopyrightStatus StaticTableLookup::lookup(const std::string& entity) {
  calls_.fetch_add(1, std::memory_order_relaxed);
  const auto it = table_.find(fold_entity(entity));
  return it == table_.end() ? default_status_ : it->second;
}

std::string StaticTableLookup::id() const { return "static-table"; }

std::size_t StaticTableLookup::calls() const { return calls_.load(std::memory_order_relaxed); }

FileListLookup::FileListLookup(const std::filesystem::path& path) : table_([&path] {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lookup list: " + path.string());
  std::map<std::string, CopyrightStatus> table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_copy(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!record.is_object() || !record.contains("entity") || !record["entity"].is_string() ||
        !record.contains("status") || !record["status"].is_string()) {
      throw DataError("expected an object with string fields entity and status", line_no);
    }
    const auto status = copyright_status_from(record["status"].get<std::string>());
    if (!status) {
      throw DataError("unknown status \"" + record["status"].get<std::string>() +
                          "\" (expected copyrighted, public_domain, or unknown)",
                      line_no);
    }
    table[record["entity"].get<std::string>()] = *status;
  }
  return table;
}()) {}

CopyrightStatus FileListLookup::lookup(const std::string& entity) {
  return table_.lookup(entity);
}

std::string FileListLookup::id() const { return "file-list"; }

HttpLookup::HttpLookup(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {}

CopyrightStatus HttpLookup::lookup(const std::string& entity) {
  httplib::Client cli(base_url_);
  cli.set_connection_timeout(timeout_);
  cli.set_read_timeout(timeout_);
  const auto res = cli.Get("/lookup", httplib::Params{{"entity", entity}}, httplib::Headers{});
  if (!res) {
    throw TransportError("lookup request to " + base_url_ +
                         " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("lookup request to " + base_url_ + " returned status " +
                         std::to_string(res->status));
  }
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::parse_error&) {
    throw TransportError("lookup reply is not valid JSON");
  }
  if (!body.is_object() || !body.contains("status") || !body["status"].is_string()) {
    throw TransportError("lookup reply is missing a string status field");
  }
  const auto status = copyright_status_from(body["status"].get<std::string>());
  if (!status) {
    throw TransportError("lookup reply carries unknown status \"" +
                         body["status"].get<std::string>() + "\"");
  }
  return *status;
}

std::string HttpLookup::id() const { return "http-search"; }

// --- StatusCache ---------------------------------------------------------

StatusCache::StatusCache(std::chrono::seconds ttl, Clock clock)
    : ttl_(ttl), clock_(clock ? std::move(clock) : [] { return std::chrono::system_clock::now(); }) {}

std::optional<LookupResult> StatusCache::get(const std::string& entity) const {
  const std::lock_guard<std::mutex> lock(mu_);
  const auto it = entries_.find(fold_entity(entity));
  if (it == entries_.end()) return std::nullopt;
  const auto& entry = it->second;
  const auto ttl = entry.ttl.count() > 0 ? entry.ttl : ttl_;
  if (clock_() >= entry.fetched_at + ttl) return std::nullopt;  // at or past TTL is stale
  LookupResult fresh = entry;
  fresh.source = "cache";
  return fresh;
}

void StatusCache::put(LookupResult result) {
  const std::lock_guard<std::mutex> lock(mu_);
  if (result.fetched_at == std::chrono::system_clock::time_point{}) result.fetched_at = clock_();
  if (result.ttl.count() <= 0) result.ttl = ttl_;
  entries_.insert_or_assign(fold_entity(result.entity), std::move(result));
}

std::size_t StatusCache::size() const {
  const std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

// --- pipeline steps ------------------------------------------------------

std::vector<LookupResult> verify_copyright(std::span<const std::string> entities,
                                           LookupClient& client, StatusCache& cache) {
  if (entities.empty()) throw std::invalid_argument("verify_copyright: no entities to verify");
  std::vector<LookupResult> results;
  results.reserve(entities.size());
  for (const auto& entity : entities) {
    if (auto cached = cache.get(entity)) {
      results.push_back(std::move(*cached));
      continue;
    }
    LookupResult result;
    result.entity = entity;
    result.fetched_at = cache.now();
    result.ttl = cache.ttl();
    try {
      result.status = client.lookup(entity);
      result.source = client.id();
      cache.put(result);
    } catch (const std::exception&) {
      // Backend failure degrades to unknown and is never cached.
      result.status = CopyrightStatus::kUnknown;
      result.source = client.id() + ":unavailable";
    }
    results.push_back(std::move(result));
  }
  return results;
}

RoutingDecision route(const TopicFlag& flag, std::vector<LookupResult> lookups,
                      const RoutingPolicy& policy) {
  RoutingDecision decision;
  decision.flag = flag;
  decision.lookups = std::move(lookups);
  decision.policy_id = !policy.policy_id.empty()
                           ? policy.policy_id
                           : (policy.conservative_unknown ? "conservative-unknown-v1"
                                                         : "confirmed-only-v1");
  const bool risky = std::any_of(
      decision.lookups.begin(), decision.lookups.end(), [&policy](const LookupResult& r) {
        return r.status == CopyrightStatus::kCopyrighted ||
               (r.status == CopyrightStatus::kUnknown && policy.conservative_unknown);
      });
  decision.route = flag.flagged && risky ? Route::kCompliant : Route::kBase;
  return decision;
}

// --- Gateway -------------------------------------------------------------

Gateway::Gateway(GatewayConfig config, std::unique_ptr<TopicAnalyzer> analyzer,
                 std::unique_ptr<LookupClient> lookup, StatusCache::Clock clock)
    : config_(std::move(config)),
      analyzer_(std::move(analyzer)),
      lookup_(std::move(lookup)),
      cache_(config_.cache_ttl, std::move(clock)),
      base_client_(config_.base_endpoint),
      compliant_client_(config_.compliant_endpoint),
      slots_(static_cast<std::ptrdiff_t>(
          std::clamp<std::size_t>(config_.max_in_flight, 1, 4096))) {
  if (analyzer_ == nullptr) throw std::invalid_argument("Gateway: analyzer is required");
  if (lookup_ == nullptr) throw std::invalid_argument("Gateway: lookup client is required");
}

GatewayResponse Gateway::handle_request(const std::string& prompt) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<4096>& slots;
    ~Release() { slots.release(); }
  } release{slots_};

  TopicFlag flag;
  bool analyzer_ok = true;
  try {
    flag = analyzer_->analyze(prompt);
  } catch (const std::exception&) {
    analyzer_ok = false;
    flag = TopicFlag{};
    flag.analyzer_id = analyzer_->id() + ":unavailable";
  }

  std::vector<LookupResult> lookups;
  if (analyzer_ok && flag.flagged) {
    lookups = verify_copyright(flag.entities, *lookup_, cache_);
  }

  RoutingDecision decision = route(flag, std::move(lookups), config_.policy);
  if (!analyzer_ok && config_.policy.conservative_unknown) {
    // With no analysis available, a conservative policy assumes risk.
    decision.route = Route::kCompliant;
  }

  GatewayResponse response;
  ChatClient& client = decision.route == Route::kCompliant ? compliant_client_ : base_client_;
  try {
    response.reply = client.complete({{"user", prompt}});
    response.ok = true;
  } catch (const std::exception& e) {
    response.ok = false;
    response.error = e.what();
  }
  response.decision = std::move(decision);
  return response;
}

// --- config loading ------------------------------------------------------

namespace {

std::string expand_env(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find("${", pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    out.append(text, pos, open - pos);
    const std::size_t close = text.find('}', open + 2);
    if (close == std::string::npos) {
      throw ConfigError("unterminated ${ in config value: " + text);
    }
    const std::string name = text.substr(open + 2, close - open - 2);
    if (name.empty()) throw ConfigError("empty environment reference ${} in config");
    const char* value = std::getenv(name.c_str());
    if (value == nullptr) {
      throw ConfigError("environment variable " + name + " referenced in config is not set");
    }
    out += value;
    pos = close + 1;
  }
  return out;
}

void expand_env_tree(json& node) {
  if (node.is_string()) {
    node = expand_env(node.get<std::string>());
  } else if (node.is_object() || node.is_array()) {
    for (auto& child : node) expand_env_tree(child);
  }
}

ChatEndpoint parse_endpoint(const json& node, const std::string& role) {
  if (!node.is_object() || !node.contains("url") || !node["url"].is_string()) {
    throw ConfigError(role + " endpoint needs a string url field");
  }
  ChatEndpoint endpoint;
  endpoint.base_url = node["url"].get<std::string>();
  endpoint.model = node.value("model", role);
  if (node.contains("timeout_ms")) {
    endpoint.timeout = std::chrono::milliseconds(node["timeout_ms"].get<long long>());
  }
  if (node.contains("max_retries")) endpoint.max_retries = node["max_retries"].get<int>();
  if (node.contains("auth_token_env")) {
    const std::string var = node["auth_token_env"].get<std::string>();
    const char* token = std::getenv(var.c_str());
    if (token == nullptr) {
      throw ConfigError("auth token environment variable " + var + " is not set");
    }
    endpoint.auth_token = token;
  }
  return endpoint;
}

std::vector<std::string> read_entity_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open entities file: " + path.string());
  std::vector<std::string> entities;
  std::string line;
  while (std::getline(in, line)) {
    const std::string entry = trim_copy(line);
    if (entry.empty() || entry.front() == '#') continue;
    entities.push_back(entry);
  }
  return entities;
}

}  // namespace

GatewaySetup load_gateway_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open gateway config: " + path.string());
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("gateway config is not valid JSON: " + std::string(e.what()));
  }
  if (!root.is_object()) throw ConfigError("gateway config must be a JSON object");
  expand_env_tree(root);

  GatewaySetup setup;
  if (root.contains("entities")) {
    if (!root["entities"].is_array()) throw ConfigError("entities must be an array of strings");
    for (const auto& entry : root["entities"]) {
      if (!entry.is_string()) throw ConfigError("entities must be an array of strings");
      setup.config.entities.push_back(entry.get<std::string>());
    }
  }
  if (root.contains("entities_file")) {
    const auto extra = read_entity_file(root["entities_file"].get<std::string>());
    setup.config.entities.insert(setup.config.entities.end(), extra.begin(), extra.end());
  }
  setup.config.policy.conservative_unknown = root.value("conservative_unknown", true);
  setup.config.policy.policy_id = root.value("policy_id", std::string{});
  if (root.contains("cache_ttl_seconds")) {
    const long long ttl = root["cache_ttl_seconds"].get<long long>();
    if (ttl <= 0) throw ConfigError("cache_ttl_seconds must be positive");
    setup.config.cache_ttl = std::chrono::seconds(ttl);
  }
  if (root.contains("max_in_flight")) {
    const long long cap = root["max_in_flight"].get<long long>();
    if (cap <= 0) throw ConfigError("max_in_flight must be positive");
    setup.config.max_in_flight = static_cast<std::size_t>(cap);
  }
  if (!root.contains("base_endpoint") || !root.contains("compliant_endpoint")) {
    throw ConfigError("gateway config needs base_endpoint and compliant_endpoint");
  }
  setup.config.base_endpoint = parse_endpoint(root["base_endpoint"], "base");
  setup.config.compliant_endpoint = parse_endpoint(root["compliant_endpoint"], "compliant");

  const json analyzer_node = root.value("analyzer", json{{"kind", "keyword"}});
  const std::string analyzer_kind = analyzer_node.value("kind", "keyword");
  if (analyzer_kind == "keyword") {
    setup.analyzer = std::make_unique<KeywordAnalyzer>(setup.config.entities);
  } else if (analyzer_kind == "remote") {
    ChatEndpoint endpoint = parse_endpoint(analyzer_node, "analyzer");
    setup.analyzer = std::make_unique<RemoteAnalyzer>(std::move(endpoint));
  } else {
    throw ConfigError("unknown analyzer kind \"" + analyzer_kind +
                      "\" (expected keyword or remote)");
  }

  const json lookup_node = root.value("lookup", json{{"kind", "static"}});
  const std::string lookup_kind = lookup_node.value("kind", "static");
  if (lookup_kind == "static") {
    std::map<std::string, CopyrightStatus> table;
    if (lookup_node.contains("table")) {
      if (!lookup_node["table"].is_object()) {
        throw ConfigError("lookup table must map entity names to statuses");
      }
      for (const auto& [entity, value] : lookup_node["table"].items()) {
        if (!value.is_string()) throw ConfigError("lookup table statuses must be strings");
        const auto status = copyright_status_from(value.get<std::string>());
        if (!status) {
          throw ConfigError("unknown lookup status \"" + value.get<std::string>() +
                            "\" for entity " + entity);
        }
        table[entity] = *status;
      }
    }
    setup.lookup = std::make_unique<StaticTableLookup>(std::move(table));
  } else if (lookup_kind == "file") {
    if (!lookup_node.contains("path") || !lookup_node["path"].is_string()) {
      throw ConfigError("file lookup needs a string path field");
    }
    setup.lookup = std::make_unique<FileListLookup>(lookup_node["path"].get<std::string>());
  } else if (lookup_kind == "http") {
    if (!lookup_node.contains("url") || !lookup_node["url"].is_string()) {
      throw ConfigError("http lookup needs a string url field");
    }
    auto timeout = std::chrono::milliseconds(lookup_node.value("timeout_ms", 5000));
    setup.lookup = std::make_unique<HttpLookup>(lookup_node["url"].get<std::string>(), timeout);
  } else {
    throw ConfigError("unknown lookup kind \"" + lookup_kind +
                      "\" (expected static, file, or http)");
  }

  return setup;
}

}  // namespace fairuse
