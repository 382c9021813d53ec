// fairuse: batch evaluation, model probing, gateway serving, and dataset
// validation behind one binary. Exit codes: 0 success, 1 internal failure,
// 2 configuration error, 3 data error.
#include "fairuse/errors.hpp"
#include "fairuse/gateway_server.hpp"
#include "fairuse/metrics.hpp"
#include "fairuse/overlap.hpp"
#include "fairuse/pipeline.hpp"
#include "fairuse/prefdata.hpp"
#include "fairuse/probing.hpp"
#include "fairuse/scoring.hpp"
#include "fairuse/textcorpus.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace {

using json = nlohmann::json;
using namespace fairuse;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Options {
  std::string corpus_path;
  std::string responses_path;
  std::string suite_path;
  std::string patterns_path;
  std::string gateway_path;
  std::string out_path;
  std::string format = "table";
  std::string scorer = "lexical";
  std::string judge_url;
  std::string judge_helpfulness_template = "helpfulness-judge-v1";
  std::string judge_risk_template = "risk-judge-v1";
  std::string endpoint_base;
  std::string endpoint_compliant;
  std::string dataset_path;
  std::string host = "127.0.0.1";
  int port = 8080;
  double alpha = 1.0;
  double beta_u = 1.0;
  double beta_c = 1.0;
  std::size_t jobs = 4;
};

// A response under evaluation, as read from the responses file.
struct ResponseRecord {
  std::string id;
  std::string prompt;
  std::string response;
  std::string category;  // free-form grouping label, may be empty
};

struct ScoredResponse {
  ResponseRecord input;
  OverlapReport overlap;
  double helpfulness = 0.0;
  double risk = 0.0;
  double utility = 0.0;
  double cah_value = 0.0;
  bool refusal = false;
};

void require_exists(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path is required");
  if (!std::filesystem::exists(path)) throw ConfigError(what + " not found: " + path);
}

MetricParams make_metric_params(const Options& o) {
  if (!std::isfinite(o.alpha) || o.alpha <= 0.0) {
    throw ConfigError("--alpha must be positive and finite");
  }
  if (!std::isfinite(o.beta_u) || o.beta_u <= 0.0) {
    throw ConfigError("--beta-u must be positive and finite");
  }
  if (!std::isfinite(o.beta_c) || o.beta_c <= 0.0) {
    throw ConfigError("--beta-c must be positive and finite");
  }
  return MetricParams{o.alpha, o.beta_u, o.beta_c};
}

std::vector<std::string> load_patterns(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open patterns file: " + path);
  std::vector<std::string> patterns;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    patterns.push_back(line);
  }
  if (patterns.empty()) throw ConfigError("patterns file has no patterns: " + path);
  return patterns;
}

// Secrets come from the environment only, never from flags or files.
std::string env_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value == nullptr ? std::string{} : std::string(value);
}

ScorerConfig make_scorer(const Options& o, const std::vector<std::string>& patterns) {
  ScorerConfig config;
  config.refusal_patterns = patterns;
  if (o.scorer == "lexical") {
    config.kind = ScorerKind::kLexical;
    return config;
  }
  config.kind = ScorerKind::kRemoteJudge;
  if (o.judge_url.empty()) {
    throw ConfigError("--scorer remote needs --judge-url (or FAIRUSE_JUDGE_URL)");
  }
  config.endpoint = o.judge_url;
  config.auth_token = env_or_empty("FAIRUSE_JUDGE_TOKEN");
  return config;
}

std::vector<ResponseRecord> load_responses(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open responses file: " + path);
  std::vector<ResponseRecord> records;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json node;
    try {
      node = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!node.is_object()) throw DataError("expected a JSON object", line_no);
    ResponseRecord record;
    for (const char* field : {"id", "prompt", "response"}) {
      if (!node.contains(field) || !node[field].is_string()) {
        throw DataError(std::string("missing string field \"") + field + "\"", line_no);
      }
    }
    record.id = node["id"].get<std::string>();
    record.prompt = node["prompt"].get<std::string>();
    record.response = node["response"].get<std::string>();
    record.category = node.value("category", std::string{});
    if (record.id.empty()) throw DataError("empty response id", line_no);
    if (!seen.insert(record.id).second) {
      throw DataError("duplicate response id \"" + record.id + "\"", line_no);
    }
    records.push_back(std::move(record));
  }
  if (records.empty()) throw DataError("responses file has no records: " + path);
  return records;
}

json stats_to_json(const AggregateStats& stats) {
  return {{"mean", stats.mean},
          {"std_dev", stats.std_dev},
          {"p25", stats.p25},
          {"p50", stats.p50},
          {"p75", stats.p75}};
}

void write_lines(const std::string& path, const std::vector<json>& lines) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write output file: " + path);
  for (const auto& line : lines) out << line.dump() << "\n";
}

void emit(const Options& o, const std::vector<json>& records, const std::string& table) {
  if (!o.out_path.empty()) write_lines(o.out_path, records);
  if (o.format == "records") {
    for (const auto& record : records) std::cout << record.dump() << "\n";
  } else {
    std::cout << table;
  }
}

// --- eval ----------------------------------------------------------------

struct MetricColumns {
  std::vector<double> lcs_norm, rouge_f1, coverage, helpfulness, risk, utility, cah_values;

  void add(const ScoredResponse& s) {
    lcs_norm.push_back(s.overlap.lcs_norm);
    rouge_f1.push_back(s.overlap.rouge.f1);
    coverage.push_back(s.overlap.coverage);
    helpfulness.push_back(s.helpfulness);
    risk.push_back(s.risk);
    utility.push_back(s.utility);
    cah_values.push_back(s.cah_value);
  }

  json aggregate_json(const std::string& group) const {
    return {{"kind", "aggregate"},
            {"group", group},
            {"n", lcs_norm.size()},
            {"metrics",
             {{"lcs_norm", stats_to_json(aggregate(lcs_norm))},
              {"rouge_f1", stats_to_json(aggregate(rouge_f1))},
              {"coverage", stats_to_json(aggregate(coverage))},
              {"helpfulness", stats_to_json(aggregate(helpfulness))},
              {"risk", stats_to_json(aggregate(risk))},
              {"utility", stats_to_json(aggregate(utility))},
              {"cah", stats_to_json(aggregate(cah_values))}}}};
  }

  MetricRow metric_row(const std::string& label) const {
    return MetricRow{label, aggregate(lcs_norm), aggregate(rouge_f1), aggregate(utility),
                     aggregate(cah_values)};
  }
};

int cmd_eval(const Options& o) {
  const MetricParams params = make_metric_params(o);
  require_exists(o.corpus_path, "corpus file");
  require_exists(o.responses_path, "responses file");
  const CorpusIndex corpus = load_corpus(o.corpus_path);
  const auto responses = load_responses(o.responses_path);
  std::vector<std::string> patterns;
  if (!o.patterns_path.empty()) {
    require_exists(o.patterns_path, "patterns file");
    patterns = load_patterns(o.patterns_path);
  }
  ScorerConfig h_scorer = make_scorer(o, patterns);
  ScorerConfig r_scorer = h_scorer;
  if (h_scorer.kind == ScorerKind::kRemoteJudge) {
    h_scorer.template_id = o.judge_helpfulness_template;
    r_scorer.template_id = o.judge_risk_template;
  }
  validate_scorer(h_scorer);
  validate_scorer(r_scorer);
  const auto active_patterns = patterns.empty()
                                   ? default_refusal_patterns()
                                   : std::span<const std::string>(patterns);

  std::vector<ScoredResponse> scored(responses.size());
  const std::size_t jobs = std::clamp<std::size_t>(std::min(o.jobs, responses.size()), 1, 64);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < responses.size(); i = next.fetch_add(1)) {
      if (failed.load()) return;
      try {
        ScoredResponse s;
        s.input = responses[i];
        const auto seq = tokenize(s.input.response, corpus.config());
        s.overlap = analyze_overlap(seq, corpus);
        s.refusal = detect_refusal(s.input.response, active_patterns);
        s.helpfulness = score_helpfulness(s.input.prompt, s.input.response, h_scorer).value;
        s.risk = score_risk(s.input.response, corpus, r_scorer).value;
        s.utility = weighted_penalty_utility(s.helpfulness, s.risk, params);
        s.cah_value = cah(s.helpfulness, s.risk, params);
        scored[i] = std::move(s);
      } catch (const std::exception& e) {
        const std::lock_guard<std::mutex> lock(failure_mu);
        failed.store(true);
        failure = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failed.load()) throw TransportError("scoring failed: " + failure);

  std::vector<json> records;
  records.reserve(scored.size() + 8);
  std::map<std::string, MetricColumns> by_group;
  MetricColumns all;
  for (const auto& s : scored) {
    records.push_back({{"kind", "response"},
                       {"id", s.input.id},
                       {"category", s.input.category},
                       {"lcs_len", s.overlap.lcs_len},
                       {"lcs_norm", s.overlap.lcs_norm},
                       {"rouge_precision", s.overlap.rouge.precision},
                       {"rouge_recall", s.overlap.rouge.recall},
                       {"rouge_f1", s.overlap.rouge.f1},
                       {"coverage", s.overlap.coverage},
                       {"longest_span", s.overlap.longest_span},
                       {"best_doc_id", s.overlap.best_doc_id},
                       {"helpfulness", s.helpfulness},
                       {"risk", s.risk},
                       {"utility", s.utility},
                       {"cah", s.cah_value},
                       {"refusal", s.refusal}});
    const std::string group = s.input.category.empty() ? "uncategorized" : s.input.category;
    by_group[group].add(s);
    all.add(s);
  }

  std::vector<MetricRow> rows;
  if (by_group.size() > 1) {
    for (const auto& [group, columns] : by_group) {
      records.push_back(columns.aggregate_json(group));
      rows.push_back(columns.metric_row(group));
    }
  }
  records.push_back(all.aggregate_json("all"));
  rows.push_back(all.metric_row("all"));

  emit(o, records, render_metric_table(rows));
  return kExitOk;
}

// --- probe ---------------------------------------------------------------

std::vector<json> probe_records(const ProbeSuiteReport& report) {
  std::vector<json> records;
  records.reserve(report.results.size() + report.by_category.size());
  for (const auto& result : report.results) {
    json node = {{"kind", "probe"},
                 {"probe_id", result.spec.probe_id},
                 {"mode", result.spec.mode == ProbeMode::kPrefix ? "prefix" : "direct"},
                 {"category", std::string(category_name(result.spec.category))},
                 {"ok", result.ok}};
    if (result.ok) {
      node["lcs_norm"] = result.overlap.lcs_norm;
      node["rouge_f1"] = result.overlap.rouge.f1;
      node["coverage"] = result.overlap.coverage;
      node["longest_span"] = result.overlap.longest_span;
      node["helpfulness"] = result.helpfulness;
      node["risk"] = result.risk;
      node["utility"] = result.utility;
      node["cah"] = result.cah;
      node["refusal"] = result.refusal;
    } else {
      node["error"] = result.error;
    }
    records.push_back(std::move(node));
  }
  for (const auto& summary : report.by_category) {
    records.push_back({{"kind", "category"},
                       {"category", std::string(category_name(summary.category))},
                       {"n_probes", summary.n_probes},
                       {"n_ok", summary.n_ok},
                       {"n_failed", summary.n_failed},
                       {"refusal_rate", summary.refusal_rate},
                       {"metrics",
                        {{"lcs_norm", stats_to_json(summary.lcs_norm)},
                         {"rouge_f1", stats_to_json(summary.rouge_f1)},
                         {"coverage", stats_to_json(summary.coverage)},
                         {"utility", stats_to_json(summary.utility)},
                         {"cah", stats_to_json(summary.cah)}}}});
  }
  return records;
}

int cmd_probe(const Options& o) {
  ProbeParams params;
  params.metrics = make_metric_params(o);
  params.jobs = std::clamp<std::size_t>(o.jobs, 1, 64);
  require_exists(o.corpus_path, "corpus file");
  require_exists(o.suite_path, "probe suite file");
  if (o.endpoint_base.empty()) {
    throw ConfigError("--endpoint-base is required for probing");
  }
  if (!o.patterns_path.empty()) {
    require_exists(o.patterns_path, "patterns file");
    params.refusal_patterns = load_patterns(o.patterns_path);
  }

  const CorpusIndex corpus = load_corpus(o.corpus_path);
  const auto probes = load_probe_suite(o.suite_path, corpus);
  ChatEndpoint endpoint;
  endpoint.base_url = o.endpoint_base;
  endpoint.model = "probe-target";
  endpoint.auth_token = env_or_empty("FAIRUSE_ENDPOINT_TOKEN");
  ChatClient client(endpoint);

  ProbeSuiteReport report;
  try {
    report = run_probe_suite(probes, client, corpus, params);
  } catch (const ProbeSuiteError& e) {
    // Keep whatever was recorded so the failure is diagnosable.
    if (!o.out_path.empty()) write_lines(o.out_path, probe_records(e.partial()));
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }

  std::vector<MetricRow> rows;
  rows.reserve(report.by_category.size());
  for (const auto& summary : report.by_category) {
    rows.push_back(MetricRow{std::string(category_name(summary.category)), summary.lcs_norm,
                             summary.rouge_f1, summary.utility, summary.cah});
  }
  emit(o, probe_records(report), render_metric_table(rows, "Category"));
  if (report.n_failed > 0) {
    std::cerr << report.n_failed << " of " << report.results.size() << " probes failed\n";
  }
  return kExitOk;
}

// --- serve ---------------------------------------------------------------

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

int cmd_serve(const Options& o) {
  require_exists(o.gateway_path, "gateway config file");
  GatewaySetup setup = load_gateway_config(o.gateway_path);
  if (!o.endpoint_base.empty()) setup.config.base_endpoint.base_url = o.endpoint_base;
  if (!o.endpoint_compliant.empty()) {
    setup.config.compliant_endpoint.base_url = o.endpoint_compliant;
  }

  Gateway gateway(std::move(setup.config), std::move(setup.analyzer), std::move(setup.lookup));
  GatewayServer server(gateway, o.host, o.port);
  std::cout << "listening on " << o.host << ":" << server.port() << std::endl;

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  server.stop();  // finishes in-flight requests before returning
  std::cout << "drained, shutting down" << std::endl;
  return kExitOk;
}

// --- validate-data -------------------------------------------------------

int cmd_validate_data(const Options& o) {
  require_exists(o.dataset_path, "dataset file");
  const ValidationReport report = validate_dataset(o.dataset_path);
  for (const auto& issue : report.errors) {
    std::cout << "line " << issue.line << ": " << issue.reason << "\n";
  }
  std::cout << report.n_valid << " valid record" << (report.n_valid == 1 ? "" : "s") << ", "
            << report.errors.size() << " error" << (report.errors.size() == 1 ? "" : "s")
            << "\n";
  return report.errors.empty() ? kExitOk : kExitData;
}

// CLI11 applies config-file values before it reads environment variables, so
// a file entry would shadow a live env var. Dropping file entries whose option
// has a set env var restores the precedence: flag > environment > file.
class EnvAwareConfig : public CLI::ConfigINI {
 public:
  explicit EnvAwareConfig(const CLI::App* app) : app_(app) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigINI::from_config(input);
    std::erase_if(items, [this](const CLI::ConfigItem& item) {
      const CLI::App* scope = app_;
      for (const auto& parent : item.parents) {
        scope = scope->get_subcommand_no_throw(parent);
        if (scope == nullptr) return false;
      }
      const CLI::Option* option = scope->get_option_no_throw("--" + item.name);
      if (option == nullptr || option->get_envname().empty()) return false;
      const char* live = std::getenv(option->get_envname().c_str());
      return live != nullptr && *live != '\0';
    });
    return items;
  }

 private:
  const CLI::App* app_;
};

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Copyright-compliance toolkit: overlap metrics, model probing, "
               "routing gateway, and preference-data validation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI config file; precedence: flag > environment > file");
  app.config_formatter(std::make_shared<EnvAwareConfig>(&app));

  auto add_metric_flags = [&](CLI::App* cmd) {
    cmd->add_option("--alpha", o.alpha, "Helpfulness weight in Utility (must be > 0)")
        ->envname("FAIRUSE_ALPHA");
    cmd->add_option("--beta-u", o.beta_u, "Risk weight in Utility (must be > 0)")
        ->envname("FAIRUSE_BETA_U");
    cmd->add_option("--beta-c", o.beta_c, "Safety emphasis in CAH (must be > 0)")
        ->envname("FAIRUSE_BETA_C");
  };
  auto add_output_flags = [&](CLI::App* cmd) {
    cmd->add_option("--out", o.out_path, "Write line-delimited result records to this path")
        ->envname("FAIRUSE_OUT");
    cmd->add_option("--format", o.format, "Stdout format")
        ->check(CLI::IsMember({"table", "records"}))
        ->envname("FAIRUSE_FORMAT");
    cmd->add_option("--jobs", o.jobs, "Worker pool size")->envname("FAIRUSE_JOBS");
  };

  auto* eval = app.add_subcommand("eval", "Score a responses file against a reference corpus");
  eval->add_option("--corpus", o.corpus_path, "Reference corpus (JSONL)")
      ->required()
      ->envname("FAIRUSE_CORPUS");
  eval->add_option("--responses", o.responses_path, "Responses to score (JSONL)")
      ->required()
      ->envname("FAIRUSE_RESPONSES");
  eval->add_option("--scorer", o.scorer, "Helpfulness/risk scorer")
      ->check(CLI::IsMember({"lexical", "remote"}))
      ->envname("FAIRUSE_SCORER");
  eval->add_option("--judge-url", o.judge_url, "Remote judge endpoint (scorer=remote)")
      ->envname("FAIRUSE_JUDGE_URL");
  eval->add_option("--judge-helpfulness-template", o.judge_helpfulness_template,
                   "Judge template for helpfulness (scorer=remote)");
  eval->add_option("--judge-risk-template", o.judge_risk_template,
                   "Judge template for risk (scorer=remote)");
  eval->add_option("--patterns", o.patterns_path, "Refusal pattern list, one per line")
      ->envname("FAIRUSE_PATTERNS");
  add_metric_flags(eval);
  add_output_flags(eval);

  auto* probe = app.add_subcommand("probe", "Run a probe suite against a model endpoint");
  probe->add_option("--corpus", o.corpus_path, "Reference corpus (JSONL)")
      ->required()
      ->envname("FAIRUSE_CORPUS");
  probe->add_option("--suite", o.suite_path, "Probe suite (JSONL)")
      ->required()
      ->envname("FAIRUSE_SUITE");
  probe->add_option("--endpoint-base", o.endpoint_base, "Model endpoint to probe")
      ->envname("FAIRUSE_ENDPOINT_BASE");
  probe->add_option("--patterns", o.patterns_path, "Refusal pattern list, one per line")
      ->envname("FAIRUSE_PATTERNS");
  add_metric_flags(probe);
  add_output_flags(probe);

  auto* serve = app.add_subcommand("serve", "Run the routing gateway");
  serve->add_option("--gateway", o.gateway_path, "Gateway config (JSON)")
      ->required()
      ->envname("FAIRUSE_GATEWAY");
  serve->add_option("--host", o.host, "Bind address")->envname("FAIRUSE_HOST");
  serve->add_option("--port", o.port, "Bind port; 0 picks an ephemeral port")
      ->envname("FAIRUSE_PORT");
  serve->add_option("--endpoint-base", o.endpoint_base, "Override the base endpoint URL")
      ->envname("FAIRUSE_ENDPOINT_BASE");
  serve
      ->add_option("--endpoint-compliant", o.endpoint_compliant,
                   "Override the compliant endpoint URL")
      ->envname("FAIRUSE_ENDPOINT_COMPLIANT");

  auto* validate = app.add_subcommand("validate-data", "Validate a preference dataset");
  validate->add_option("dataset", o.dataset_path, "Dataset file (JSONL)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (eval->parsed()) return cmd_eval(o);
    if (probe->parsed()) return cmd_probe(o);
    if (serve->parsed()) return cmd_serve(o);
    if (validate->parsed()) return cmd_validate_data(o);
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
}
