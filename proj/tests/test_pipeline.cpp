#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "fairuse/errors.hpp"
#include "fairuse/gateway_server.hpp"
#include "fairuse/pipeline.hpp"

#include "support/mock_http.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace {

using json = nlohmann::json;
using namespace std::chrono_literals;

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

fairuse::LookupResult make_lookup(std::string entity, fairuse::CopyrightStatus status) {
  fairuse::LookupResult result;
  result.entity = std::move(entity);
  result.status = status;
  result.source = "test";
  return result;
}

fairuse::TopicFlag flagged_on(std::vector<std::string> entities) {
  fairuse::TopicFlag flag;
  flag.flagged = !entities.empty();
  flag.entities = std::move(entities);
  flag.confidence = flag.flagged ? 1.0 : 0.0;
  flag.analyzer_id = "test";
  return flag;
}

fairuse::ChatEndpoint make_endpoint(const std::string& url, const std::string& model) {
  fairuse::ChatEndpoint endpoint;
  endpoint.base_url = url;
  endpoint.model = model;
  endpoint.max_retries = 0;
  endpoint.timeout = 2000ms;
  return endpoint;
}

struct FailingLookup : fairuse::LookupClient {
  fairuse::CopyrightStatus lookup(const std::string&) override {
    throw fairuse::TransportError("lookup backend is down");
  }
  std::string id() const override { return "flaky"; }
};

struct FailingAnalyzer : fairuse::TopicAnalyzer {
  fairuse::TopicFlag analyze(const std::string&) override {
    throw fairuse::TransportError("analyzer backend is down");
  }
  std::string id() const override { return "flaky-analyzer"; }
};

}  // namespace

TEST_CASE("copyright status names round-trip") {
  using fairuse::CopyrightStatus;
  for (const auto status : {CopyrightStatus::kCopyrighted, CopyrightStatus::kPublicDomain,
                            CopyrightStatus::kUnknown}) {
    const auto name = fairuse::to_string(status);
    const auto parsed = fairuse::copyright_status_from(name);
    REQUIRE(parsed.has_value());
    CHECK(*parsed == status);
  }
  CHECK_FALSE(fairuse::copyright_status_from("restricted").has_value());
  CHECK(fairuse::to_string(fairuse::Route::kBase) == "base");
  CHECK(fairuse::to_string(fairuse::Route::kCompliant) == "compliant");
}

TEST_CASE("keyword analyzer flags configured phrases") {
  fairuse::KeywordAnalyzer analyzer({"Harry Potter", "Moby Dick"});
  CHECK(analyzer.id() == "keyword-v1");

  const auto hit = analyzer.analyze("Please summarize Harry Potter in detail.");
  CHECK(hit.flagged);
  REQUIRE(hit.entities.size() == 1);
  CHECK(hit.entities[0] == "Harry Potter");
  CHECK(hit.confidence == doctest::Approx(1.0));
  CHECK(hit.analyzer_id == "keyword-v1");

  const auto miss = analyzer.analyze("What is the capital of France?");
  CHECK_FALSE(miss.flagged);
  CHECK(miss.entities.empty());
  CHECK(miss.confidence == doctest::Approx(0.0));
}

TEST_CASE("keyword analyzer is case and punctuation insensitive") {
  fairuse::KeywordAnalyzer analyzer({"Harry Potter"});
  CHECK(analyzer.analyze("i love HARRY POTTER").flagged);
  CHECK(analyzer.analyze("Have you read \"Harry Potter\"?").flagged);
  // Hyphenated compounds collapse to one token and do not match the phrase.
  CHECK_FALSE(analyzer.analyze("harry-potter fans unite").flagged);
}

TEST_CASE("keyword analyzer needs the whole phrase as separate words") {
  fairuse::KeywordAnalyzer analyzer({"Harry Potter"});
  CHECK_FALSE(analyzer.analyze("I met Harry yesterday").flagged);
  CHECK_FALSE(analyzer.analyze("Potter is a common surname").flagged);
  CHECK_FALSE(analyzer.analyze("the Potterheads and Harry fans").flagged);
  CHECK_FALSE(analyzer.analyze("HarryPotter").flagged);  // one token, not the phrase
}

TEST_CASE("keyword analyzer orders entities by first occurrence") {
  fairuse::KeywordAnalyzer analyzer({"Foundation", "Harry Potter", "Dune"});
  const auto flag = analyzer.analyze("Compare Harry Potter with Foundation, please.");
  REQUIRE(flag.entities.size() == 2);
  CHECK(flag.entities[0] == "Harry Potter");
  CHECK(flag.entities[1] == "Foundation");
}

TEST_CASE("keyword analyzer drops empty and duplicate configured entries") {
  fairuse::KeywordAnalyzer analyzer({"", "  ", "Dune", "DUNE!", "dune"});
  const auto flag = analyzer.analyze("Dune is on my desk");
  REQUIRE(flag.entities.size() == 1);
  CHECK(flag.entities[0] == "Dune");
}

TEST_CASE("remote analyzer parses one entity per reply line") {
  testutil::MockChatServer server(
      [](const json&) { return std::string("The Hobbit\n- Dune\n\nnone of this line\n"); });
  fairuse::RemoteAnalyzer analyzer(make_endpoint(server.base_url(), "analyzer"));
  const auto flag = analyzer.analyze("books on my shelf");
  CHECK(flag.flagged);
  REQUIRE(flag.entities.size() == 3);
  CHECK(flag.entities[0] == "The Hobbit");
  CHECK(flag.entities[1] == "Dune");
  CHECK(flag.entities[2] == "none of this line");
  CHECK(flag.analyzer_id == "remote-analyzer-v1");
}

TEST_CASE("remote analyzer treats a bare none as clean") {
  testutil::MockChatServer server([](const json&) { return std::string("  None \n"); });
  fairuse::RemoteAnalyzer analyzer(make_endpoint(server.base_url(), "analyzer"));
  const auto flag = analyzer.analyze("2 + 2 = ?");
  CHECK_FALSE(flag.flagged);
  CHECK(flag.entities.empty());
}

TEST_CASE("remote analyzer surfaces transport failures") {
  fairuse::RemoteAnalyzer analyzer(make_endpoint(testutil::dead_endpoint(), "analyzer"));
  CHECK_THROWS_AS(analyzer.analyze("anything"), fairuse::TransportError);
}

TEST_CASE("static table lookup folds keys and counts calls") {
  fairuse::StaticTableLookup lookup(
      {{"Harry Potter", fairuse::CopyrightStatus::kCopyrighted},
       {"Moby Dick", fairuse::CopyrightStatus::kPublicDomain}});
  CHECK(lookup.id() == "static-table");
  CHECK(lookup.lookup("harry  POTTER!") == fairuse::CopyrightStatus::kCopyrighted);
  CHECK(lookup.lookup("Moby Dick") == fairuse::CopyrightStatus::kPublicDomain);
  CHECK(lookup.lookup("Unlisted Work") == fairuse::CopyrightStatus::kUnknown);
  CHECK(lookup.calls() == 3);

  fairuse::StaticTableLookup strict({}, fairuse::CopyrightStatus::kPublicDomain);
  CHECK(strict.lookup("anything") == fairuse::CopyrightStatus::kPublicDomain);
}

TEST_CASE("file list lookup reads a JSONL status table") {
  const auto path = write_temp(
      "fairuse_lookup_ok.jsonl",
      R"({"entity": "Harry Potter", "status": "copyrighted"})"
      "\n\n"
      R"({"entity": "Moby Dick", "status": "public_domain"})"
      "\n");
  fairuse::FileListLookup lookup(path);
  CHECK(lookup.id() == "file-list");
  CHECK(lookup.lookup("HARRY POTTER") == fairuse::CopyrightStatus::kCopyrighted);
  CHECK(lookup.lookup("Moby Dick") == fairuse::CopyrightStatus::kPublicDomain);
  CHECK(lookup.lookup("Someone Else") == fairuse::CopyrightStatus::kUnknown);
}

TEST_CASE("file list lookup reports bad lines with their line number") {
  const auto junk = write_temp("fairuse_lookup_junk.jsonl",
                               R"({"entity": "A", "status": "copyrighted"})"
                               "\nnot json at all\n");
  try {
    fairuse::FileListLookup lookup(junk);
    FAIL("expected DataError");
  } catch (const fairuse::DataError& e) {
    CHECK(e.line() == 2);
  }

  const auto bad_status = write_temp("fairuse_lookup_status.jsonl",
                                     R"({"entity": "A", "status": "sort of"})"
                                     "\n");
  CHECK_THROWS_AS(fairuse::FileListLookup{bad_status}, fairuse::DataError);
  CHECK_THROWS_AS(fairuse::FileListLookup{"/nonexistent/lookup.jsonl"}, fairuse::ConfigError);
}

TEST_CASE("http lookup queries the service and maps statuses") {
  testutil::MockLookupServer server([](const std::string& entity) {
    if (entity == "Harry Potter") return std::string("copyrighted");
    if (entity == "Moby Dick") return std::string("public_domain");
    return std::string("unknown");
  });
  fairuse::HttpLookup lookup(server.base_url());
  CHECK(lookup.id() == "http-search");
  CHECK(lookup.lookup("Harry Potter") == fairuse::CopyrightStatus::kCopyrighted);
  CHECK(lookup.lookup("Moby Dick") == fairuse::CopyrightStatus::kPublicDomain);
  CHECK(lookup.lookup("Fresh Manuscript") == fairuse::CopyrightStatus::kUnknown);
  CHECK(server.calls() == 3);
}

TEST_CASE("http lookup raises transport errors on failure") {
  fairuse::HttpLookup dead(testutil::dead_endpoint(), 500ms);
  CHECK_THROWS_AS(dead.lookup("anything"), fairuse::TransportError);

  testutil::MockLookupServer server([](const std::string&) { return std::string("unknown"); });
  server.fail_next(1);
  fairuse::HttpLookup lookup(server.base_url());
  CHECK_THROWS_AS(lookup.lookup("anything"), fairuse::TransportError);

  testutil::MockLookupServer garbled([](const std::string&) { return std::string("nonsense"); });
  fairuse::HttpLookup lookup2(garbled.base_url());
  CHECK_THROWS_AS(lookup2.lookup("anything"), fairuse::TransportError);
}

TEST_CASE("status cache serves fresh entries as cache hits") {
  fairuse::StatusCache cache(60s);
  CHECK(cache.size() == 0);
  CHECK_FALSE(cache.get("Harry Potter").has_value());

  auto entry = make_lookup("Harry Potter", fairuse::CopyrightStatus::kCopyrighted);
  entry.source = "static-table";
  entry.fetched_at = cache.now();
  cache.put(entry);
  CHECK(cache.size() == 1);

  const auto hit = cache.get("harry potter");  // case-folded key
  REQUIRE(hit.has_value());
  CHECK(hit->status == fairuse::CopyrightStatus::kCopyrighted);
  CHECK(hit->source == "cache");
  CHECK(hit->entity == "Harry Potter");
}

TEST_CASE("status cache never serves entries at or past their TTL") {
  auto base = std::chrono::system_clock::now();
  std::chrono::seconds offset{0};
  fairuse::StatusCache cache(60s, [&] { return base + offset; });

  auto entry = make_lookup("Dune", fairuse::CopyrightStatus::kCopyrighted);
  entry.fetched_at = cache.now();
  cache.put(entry);

  offset = 59s;
  CHECK(cache.get("Dune").has_value());
  offset = 60s;
  CHECK_FALSE(cache.get("Dune").has_value());
  offset = 61s;
  CHECK_FALSE(cache.get("Dune").has_value());

  // Rewriting the entry restarts its clock.
  entry.fetched_at = cache.now();
  cache.put(entry);
  CHECK(cache.get("Dune").has_value());
}

TEST_CASE("status cache expiry holds for random TTLs and delays") {
  std::mt19937 rng(20260823);
  auto base = std::chrono::system_clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    const auto ttl = std::chrono::seconds(std::uniform_int_distribution<int>(1, 100)(rng));
    std::chrono::seconds offset{0};
    fairuse::StatusCache cache(ttl, [&] { return base + offset; });
    auto entry = make_lookup("w", fairuse::CopyrightStatus::kUnknown);
    entry.fetched_at = cache.now();
    cache.put(entry);
    offset = std::chrono::seconds(std::uniform_int_distribution<int>(0, 150)(rng));
    CHECK(cache.get("w").has_value() == (offset < ttl));
  }
}

TEST_CASE("verify_copyright rejects an empty entity list") {
  fairuse::StaticTableLookup lookup({});
  fairuse::StatusCache cache;
  CHECK_THROWS_AS(fairuse::verify_copyright({}, lookup, cache), std::invalid_argument);
}

TEST_CASE("verify_copyright consults the cache before the client") {
  fairuse::StaticTableLookup lookup({{"Harry Potter", fairuse::CopyrightStatus::kCopyrighted},
                                     {"Moby Dick", fairuse::CopyrightStatus::kPublicDomain}});
  fairuse::StatusCache cache(1h);
  const std::vector<std::string> entities{"Harry Potter", "Moby Dick"};

  const auto first = fairuse::verify_copyright(entities, lookup, cache);
  REQUIRE(first.size() == 2);
  CHECK(first[0].entity == "Harry Potter");
  CHECK(first[0].status == fairuse::CopyrightStatus::kCopyrighted);
  CHECK(first[0].source == "static-table");
  CHECK(first[1].status == fairuse::CopyrightStatus::kPublicDomain);
  CHECK(lookup.calls() == 2);
  CHECK(cache.size() == 2);

  const auto second = fairuse::verify_copyright(entities, lookup, cache);
  REQUIRE(second.size() == 2);
  CHECK(second[0].source == "cache");
  CHECK(second[1].source == "cache");
  CHECK(second[0].status == fairuse::CopyrightStatus::kCopyrighted);
  CHECK(lookup.calls() == 2);  // cache hits make no client calls
}

TEST_CASE("verify_copyright degrades lookup failures to unknown") {
  FailingLookup failing;
  fairuse::StatusCache cache;
  const std::vector<std::string> entities{"Harry Potter"};
  const auto results = fairuse::verify_copyright(entities, failing, cache);
  REQUIRE(results.size() == 1);
  CHECK(results[0].status == fairuse::CopyrightStatus::kUnknown);
  CHECK(results[0].source == "flaky:unavailable");
  CHECK(cache.size() == 0);  // failures are not cached

  // A later healthy lookup repairs the picture and is cached.
  fairuse::StaticTableLookup healthy({{"Harry Potter", fairuse::CopyrightStatus::kCopyrighted}});
  const auto repaired = fairuse::verify_copyright(entities, healthy, cache);
  CHECK(repaired[0].status == fairuse::CopyrightStatus::kCopyrighted);
  CHECK(cache.size() == 1);
}

TEST_CASE("route follows the decision table") {
  const fairuse::RoutingPolicy conservative{true, ""};
  const fairuse::RoutingPolicy strict{false, ""};
  using Status = fairuse::CopyrightStatus;

  SUBCASE("not flagged goes to base") {
    const auto d = fairuse::route(flagged_on({}), {}, conservative);
    CHECK(d.route == fairuse::Route::kBase);
    CHECK(d.lookups.empty());
  }
  SUBCASE("flagged and copyrighted goes to compliant") {
    const auto d = fairuse::route(flagged_on({"A"}), {make_lookup("A", Status::kCopyrighted)},
                                  conservative);
    CHECK(d.route == fairuse::Route::kCompliant);
  }
  SUBCASE("flagged but public domain goes to base") {
    const auto d = fairuse::route(
        flagged_on({"A", "B"}),
        {make_lookup("A", Status::kPublicDomain), make_lookup("B", Status::kPublicDomain)},
        conservative);
    CHECK(d.route == fairuse::Route::kBase);
  }
  SUBCASE("unknown is conservative by default") {
    const auto d = fairuse::route(flagged_on({"A"}), {make_lookup("A", Status::kUnknown)},
                                  conservative);
    CHECK(d.route == fairuse::Route::kCompliant);
  }
  SUBCASE("unknown under a strict policy goes to base") {
    const auto d = fairuse::route(flagged_on({"A"}), {make_lookup("A", Status::kUnknown)}, strict);
    CHECK(d.route == fairuse::Route::kBase);
  }
  SUBCASE("one copyrighted hit among public domain is enough") {
    const auto d = fairuse::route(
        flagged_on({"A", "B"}),
        {make_lookup("A", Status::kPublicDomain), make_lookup("B", Status::kCopyrighted)}, strict);
    CHECK(d.route == fairuse::Route::kCompliant);
  }
}

TEST_CASE("route records the policy id and evidence") {
  const auto conservative =
      fairuse::route(flagged_on({"A"}), {make_lookup("A", fairuse::CopyrightStatus::kUnknown)},
                     fairuse::RoutingPolicy{true, ""});
  CHECK(conservative.policy_id == "conservative-unknown-v1");
  CHECK(conservative.flag.entities == std::vector<std::string>{"A"});
  REQUIRE(conservative.lookups.size() == 1);
  CHECK(conservative.lookups[0].entity == "A");

  const auto strict = fairuse::route(flagged_on({}), {}, fairuse::RoutingPolicy{false, ""});
  CHECK(strict.policy_id == "confirmed-only-v1");

  const auto custom = fairuse::route(flagged_on({}), {}, fairuse::RoutingPolicy{true, "team-x"});
  CHECK(custom.policy_id == "team-x");
}

namespace {

struct GatewayRig {
  testutil::MockChatServer base{[](const json&) { return std::string("base model reply"); }};
  testutil::MockChatServer compliant{
      [](const json&) { return std::string("compliant model reply"); }};

  fairuse::GatewayConfig config(bool conservative = true) const {
    fairuse::GatewayConfig cfg;
    cfg.entities = {"Harry Potter", "Moby Dick", "Mystery Novel"};
    cfg.policy.conservative_unknown = conservative;
    cfg.base_endpoint = make_endpoint(base.base_url(), "base");
    cfg.compliant_endpoint = make_endpoint(compliant.base_url(), "compliant");
    return cfg;
  }

  static std::unique_ptr<fairuse::StaticTableLookup> lookup() {
    return std::make_unique<fairuse::StaticTableLookup>(
        std::map<std::string, fairuse::CopyrightStatus>{
            {"Harry Potter", fairuse::CopyrightStatus::kCopyrighted},
            {"Moby Dick", fairuse::CopyrightStatus::kPublicDomain}});
  }

  fairuse::Gateway gateway(bool conservative = true) const {
    auto cfg = config(conservative);
    auto analyzer = std::make_unique<fairuse::KeywordAnalyzer>(cfg.entities);
    return fairuse::Gateway(std::move(cfg), std::move(analyzer), lookup());
  }
};

}  // namespace

TEST_CASE("gateway skips verification for clean prompts") {
  GatewayRig rig;
  auto cfg = rig.config();
  auto analyzer = std::make_unique<fairuse::KeywordAnalyzer>(cfg.entities);
  auto lookup = GatewayRig::lookup();
  auto* lookup_raw = lookup.get();
  fairuse::Gateway gateway(std::move(cfg), std::move(analyzer), std::move(lookup));

  const auto response = gateway.handle_request("What is the capital of France?");
  CHECK(response.ok);
  CHECK(response.reply == "base model reply");
  CHECK(response.decision.route == fairuse::Route::kBase);
  CHECK(response.decision.lookups.empty());
  CHECK(lookup_raw->calls() == 0);  // verification only runs when flagged
  CHECK(rig.base.calls() == 1);
  CHECK(rig.compliant.calls() == 0);
}

TEST_CASE("gateway routes confirmed copyrighted topics to the compliant model") {
  GatewayRig rig;
  auto gateway = rig.gateway();
  const auto response = gateway.handle_request("Please summarize Harry Potter for me");
  CHECK(response.ok);
  CHECK(response.reply == "compliant model reply");
  CHECK(response.decision.route == fairuse::Route::kCompliant);
  REQUIRE(response.decision.lookups.size() == 1);
  CHECK(response.decision.lookups[0].status == fairuse::CopyrightStatus::kCopyrighted);
  CHECK(rig.compliant.calls() == 1);
  CHECK(rig.base.calls() == 0);
}

TEST_CASE("gateway keeps public domain topics on the base model") {
  GatewayRig rig;
  auto gateway = rig.gateway();
  const auto response = gateway.handle_request("Tell me about Moby Dick");
  CHECK(response.ok);
  CHECK(response.reply == "base model reply");
  CHECK(response.decision.route == fairuse::Route::kBase);
  REQUIRE(response.decision.lookups.size() == 1);
  CHECK(response.decision.lookups[0].status == fairuse::CopyrightStatus::kPublicDomain);
}

TEST_CASE("gateway treats unknown status by policy") {
  GatewayRig rig;
  auto conservative = rig.gateway(true);
  const auto careful = conservative.handle_request("Describe Mystery Novel");
  CHECK(careful.decision.route == fairuse::Route::kCompliant);
  CHECK(careful.reply == "compliant model reply");

  auto strict = rig.gateway(false);
  const auto bold = strict.handle_request("Describe Mystery Novel");
  CHECK(bold.decision.route == fairuse::Route::kBase);
  CHECK(bold.reply == "base model reply");
}

TEST_CASE("gateway falls back to compliant when the analyzer is down") {
  GatewayRig rig;
  auto cfg = rig.config(true);
  fairuse::Gateway gateway(std::move(cfg), std::make_unique<FailingAnalyzer>(),
                           GatewayRig::lookup());
  const auto response = gateway.handle_request("anything at all");
  CHECK(response.ok);
  CHECK(response.reply == "compliant model reply");
  CHECK(response.decision.route == fairuse::Route::kCompliant);
  CHECK_FALSE(response.decision.flag.flagged);
  CHECK(response.decision.flag.analyzer_id == "flaky-analyzer:unavailable");

  auto strict_cfg = rig.config(false);
  fairuse::Gateway strict(std::move(strict_cfg), std::make_unique<FailingAnalyzer>(),
                          GatewayRig::lookup());
  CHECK(strict.handle_request("anything").decision.route == fairuse::Route::kBase);
}

TEST_CASE("gateway keeps the decision trace when the endpoint fails") {
  GatewayRig rig;
  auto cfg = rig.config();
  cfg.compliant_endpoint = make_endpoint(testutil::dead_endpoint(), "compliant");
  auto analyzer = std::make_unique<fairuse::KeywordAnalyzer>(cfg.entities);
  fairuse::Gateway gateway(std::move(cfg), std::move(analyzer), GatewayRig::lookup());

  const auto response = gateway.handle_request("Please summarize Harry Potter");
  CHECK_FALSE(response.ok);
  CHECK(response.reply.empty());
  CHECK_FALSE(response.error.empty());
  CHECK(response.decision.route == fairuse::Route::kCompliant);
  REQUIRE(response.decision.lookups.size() == 1);
  CHECK(response.decision.lookups[0].status == fairuse::CopyrightStatus::kCopyrighted);
}

TEST_CASE("gateway reuses cached lookups until they expire") {
  GatewayRig rig;
  auto cfg = rig.config();
  cfg.cache_ttl = 60s;
  auto analyzer = std::make_unique<fairuse::KeywordAnalyzer>(cfg.entities);
  auto lookup = GatewayRig::lookup();
  auto* lookup_raw = lookup.get();
  auto base = std::chrono::system_clock::now();
  std::chrono::seconds offset{0};
  fairuse::Gateway gateway(std::move(cfg), std::move(analyzer), std::move(lookup),
                           [&] { return base + offset; });

  const auto first = gateway.handle_request("Summarize Harry Potter");
  CHECK(first.decision.lookups[0].source == "static-table");
  CHECK(lookup_raw->calls() == 1);

  offset = 30s;
  const auto second = gateway.handle_request("Summarize Harry Potter");
  CHECK(second.decision.lookups[0].source == "cache");
  CHECK(lookup_raw->calls() == 1);

  offset = 120s;  // past the TTL, the client is consulted again
  const auto third = gateway.handle_request("Summarize Harry Potter");
  CHECK(third.decision.lookups[0].source == "static-table");
  CHECK(lookup_raw->calls() == 2);
}

TEST_CASE("gateway decisions are deterministic for a fixed setup") {
  GatewayRig rig;
  auto first = rig.gateway().handle_request("Compare Harry Potter and Moby Dick");
  auto second = rig.gateway().handle_request("Compare Harry Potter and Moby Dick");
  CHECK(first.decision.route == second.decision.route);
  CHECK(first.decision.policy_id == second.decision.policy_id);
  CHECK(first.decision.flag.entities == second.decision.flag.entities);
  REQUIRE(first.decision.lookups.size() == second.decision.lookups.size());
  for (std::size_t i = 0; i < first.decision.lookups.size(); ++i) {
    CHECK(first.decision.lookups[i].entity == second.decision.lookups[i].entity);
    CHECK(first.decision.lookups[i].status == second.decision.lookups[i].status);
    CHECK(first.decision.lookups[i].source == second.decision.lookups[i].source);
  }
}

TEST_CASE("gateway config loads endpoints, policy, and secrets from env") {
  GatewayRig rig;
  ::setenv("FAIRUSE_TEST_BASE_URL", rig.base.base_url().c_str(), 1);
  ::setenv("FAIRUSE_TEST_TOKEN", "sekrit", 1);
  const auto path = write_temp("fairuse_gateway_ok.json", json{
      {"entities", {"Harry Potter"}},
      {"conservative_unknown", false},
      {"policy_id", "team-policy"},
      {"cache_ttl_seconds", 120},
      {"max_in_flight", 4},
      {"base_endpoint", {{"url", "${FAIRUSE_TEST_BASE_URL}"}, {"model", "alpha"}}},
      {"compliant_endpoint",
       {{"url", rig.compliant.base_url()}, {"auth_token_env", "FAIRUSE_TEST_TOKEN"}}},
      {"lookup",
       {{"kind", "static"}, {"table", {{"Harry Potter", "copyrighted"}}}}}}.dump());

  auto setup = fairuse::load_gateway_config(path);
  CHECK(setup.config.entities == std::vector<std::string>{"Harry Potter"});
  CHECK_FALSE(setup.config.policy.conservative_unknown);
  CHECK(setup.config.policy.policy_id == "team-policy");
  CHECK(setup.config.cache_ttl == 120s);
  CHECK(setup.config.max_in_flight == 4);
  CHECK(setup.config.base_endpoint.base_url == rig.base.base_url());
  CHECK(setup.config.base_endpoint.model == "alpha");
  CHECK(setup.config.compliant_endpoint.model == "compliant");  // role default
  CHECK(setup.config.compliant_endpoint.auth_token == "sekrit");
  REQUIRE(setup.analyzer != nullptr);
  CHECK(setup.analyzer->id() == "keyword-v1");
  REQUIRE(setup.lookup != nullptr);
  CHECK(setup.lookup->id() == "static-table");

  fairuse::Gateway gateway(std::move(setup.config), std::move(setup.analyzer),
                           std::move(setup.lookup));
  const auto response = gateway.handle_request("Summarize Harry Potter");
  CHECK(response.ok);
  CHECK(response.decision.route == fairuse::Route::kCompliant);
  CHECK(response.decision.policy_id == "team-policy");
}

TEST_CASE("gateway config rejects broken files") {
  CHECK_THROWS_AS(fairuse::load_gateway_config("/nonexistent/gateway.json"),
                  fairuse::ConfigError);

  const auto not_json = write_temp("fairuse_gateway_bad.json", "{nope");
  CHECK_THROWS_AS(fairuse::load_gateway_config(not_json), fairuse::ConfigError);

  const auto no_endpoint = write_temp("fairuse_gateway_noend.json",
                                      json{{"entities", {"A"}}}.dump());
  CHECK_THROWS_AS(fairuse::load_gateway_config(no_endpoint), fairuse::ConfigError);

  ::unsetenv("FAIRUSE_TEST_MISSING");
  const auto missing_env = write_temp(
      "fairuse_gateway_env.json",
      json{{"base_endpoint", {{"url", "${FAIRUSE_TEST_MISSING}"}}},
           {"compliant_endpoint", {{"url", "http://127.0.0.1:9"}}}}.dump());
  CHECK_THROWS_AS(fairuse::load_gateway_config(missing_env), fairuse::ConfigError);

  const auto bad_lookup = write_temp(
      "fairuse_gateway_lookup.json",
      json{{"base_endpoint", {{"url", "http://127.0.0.1:9"}}},
           {"compliant_endpoint", {{"url", "http://127.0.0.1:9"}}},
           {"lookup", {{"kind", "blockchain"}}}}.dump());
  CHECK_THROWS_AS(fairuse::load_gateway_config(bad_lookup), fairuse::ConfigError);
}

TEST_CASE("gateway server answers health checks and guarded completions") {
  GatewayRig rig;
  auto gateway = rig.gateway();
  fairuse::GatewayServer server(gateway, "127.0.0.1", 0);
  CHECK(server.port() > 0);
  httplib::Client cli("127.0.0.1", server.port());

  const auto health = cli.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["status"] == "ok");

  const auto clean = cli.Post("/v1/guarded-completions",
                              json{{"prompt", "What is the capital of France?"}}.dump(),
                              "application/json");
  REQUIRE(clean);
  CHECK(clean->status == 200);
  auto clean_body = json::parse(clean->body);
  CHECK(clean_body["reply"] == "base model reply");
  CHECK(clean_body["decision"]["route"] == "base");
  CHECK(clean_body["decision"]["entities"].empty());

  const auto flagged = cli.Post("/v1/guarded-completions",
                                json{{"prompt", "Summarize Harry Potter"},
                                     {"metadata", {{"caller", "test"}}}}.dump(),
                                "application/json");
  REQUIRE(flagged);
  CHECK(flagged->status == 200);
  auto flagged_body = json::parse(flagged->body);
  CHECK(flagged_body["reply"] == "compliant model reply");
  CHECK(flagged_body["decision"]["route"] == "compliant");
  REQUIRE(flagged_body["decision"]["entities"].size() == 1);
  CHECK(flagged_body["decision"]["entities"][0] == "Harry Potter");
  REQUIRE(flagged_body["decision"]["lookups"].size() == 1);
  CHECK(flagged_body["decision"]["lookups"][0]["status"] == "copyrighted");
  CHECK(flagged_body["decision"]["policy_id"] == "conservative-unknown-v1");

  server.stop();
  server.stop();  // idempotent
}

TEST_CASE("gateway server rejects malformed requests") {
  GatewayRig rig;
  auto gateway = rig.gateway();
  fairuse::GatewayServer server(gateway, "127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", server.port());

  const auto no_prompt = cli.Post("/v1/guarded-completions", json{{"text", "hi"}}.dump(),
                                  "application/json");
  REQUIRE(no_prompt);
  CHECK(no_prompt->status == 400);
  CHECK(json::parse(no_prompt->body).contains("error"));

  const auto not_json = cli.Post("/v1/guarded-completions", "prompt=hi", "text/plain");
  REQUIRE(not_json);
  CHECK(not_json->status == 400);
}

TEST_CASE("gateway server reports endpoint failures with the decision trace") {
  GatewayRig rig;
  auto cfg = rig.config();
  cfg.compliant_endpoint = make_endpoint(testutil::dead_endpoint(), "compliant");
  auto analyzer = std::make_unique<fairuse::KeywordAnalyzer>(cfg.entities);
  fairuse::Gateway gateway(std::move(cfg), std::move(analyzer), GatewayRig::lookup());
  fairuse::GatewayServer server(gateway, "127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", server.port());

  const auto res = cli.Post("/v1/guarded-completions",
                            json{{"prompt", "Summarize Harry Potter"}}.dump(),
                            "application/json");
  REQUIRE(res);
  CHECK(res->status == 502);
  auto body = json::parse(res->body);
  CHECK_FALSE(body["error"].get<std::string>().empty());
  CHECK(body["decision"]["route"] == "compliant");
  REQUIRE(body["decision"]["lookups"].size() == 1);
  CHECK(body["decision"]["lookups"][0]["status"] == "copyrighted");
}
