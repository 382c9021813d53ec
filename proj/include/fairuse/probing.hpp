#pragma once

#include "fairuse/categories.hpp"
#include "fairuse/chat_client.hpp"
#include "fairuse/errors.hpp"
#include "fairuse/metrics.hpp"
#include "fairuse/overlap.hpp"
#include "fairuse/scoring.hpp"
#include "fairuse/textcorpus.hpp"

#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fairuse {

enum class ProbeMode { kPrefix, kDirect };

struct WorkRef {
  std::string title;
  std::string author;
};

// A single materialized probe. Prefix probes ask the model to continue the
// opening of a known document; direct probes instantiate a category
// template against a named work.
struct ProbeSpec {
  std::string probe_id;
  ProbeMode mode = ProbeMode::kDirect;
  CategoryId category = CategoryId::kVerbatimExcerpts;
  std::string prompt;
  std::string prefix_text;    // prefix mode: the raw k-token prefix
  std::string target_doc_id;  // prefix mode
  std::size_t prefix_tokens = 0;
};

// Named prompt template for direct probing. {title} and {author}
// placeholders are filled from a WorkRef.
struct ProbeTemplate {
  std::string id;
  CategoryId category;
  std::string text;
};

const std::vector<ProbeTemplate>& probe_templates();
const ProbeTemplate* find_probe_template(const std::string& id);
std::vector<const ProbeTemplate*> probe_templates_for(CategoryId category);

// Builds a continuation probe from the document's first k tokens in their
// original surface form. A non-empty frame is prepended to the prefix.
// Documents shorter than k tokens are rejected. Pass the scoring corpus's
// normalization config so token boundaries agree with the corpus view.
ProbeSpec make_prefix_probe(const Document& doc, std::size_t k = 100,
                            const std::string& frame = "",
                            const NormalizationConfig& config = {});

// Instantiates the named template with the work metadata. Placeholders the
// template uses must be non-empty in work; templates without placeholders
// pass through unchanged.
ProbeSpec make_direct_probe(CategoryId category, const WorkRef& work,
                            const std::string& template_id);

struct ProbeParams {
  MetricParams metrics;
  OverlapParams overlap;
  LexicalParams lexical;
  std::vector<std::string> refusal_patterns;  // empty picks the builtin set
  // Prefix probes score against the target document's continuation region
  // (tokens after k); false scores every probe against the whole corpus.
  bool continuation_only = true;
  std::size_t jobs = 4;  // concurrent probes, capped by the endpoint in-flight limit
};

struct ProbeResult {
  ProbeSpec spec;
  bool ok = false;
  std::string response;
  std::string error;  // set when not ok
  OverlapReport overlap;
  double helpfulness = 0.0;
  double risk = 0.0;
  double utility = 0.0;
  double cah = 0.0;
  bool refusal = false;
};

struct CategorySummary {
  CategoryId category = CategoryId::kVerbatimExcerpts;
  std::size_t n_probes = 0;  // all probes in this category
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  double refusal_rate = 0.0;  // over scored probes
  AggregateStats lcs_norm;
  AggregateStats rouge_f1;
  AggregateStats coverage;
  AggregateStats utility;
  AggregateStats cah;
};

struct ProbeSuiteReport {
  std::vector<ProbeResult> results;  // one per probe, input order
  std::vector<CategorySummary> by_category;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
};

// Raised when no probe could reach the endpoint; carries whatever was
// recorded before giving up.
class ProbeSuiteError : public TransportError {
 public:
  ProbeSuiteError(const std::string& message, ProbeSuiteReport partial);
  const ProbeSuiteReport& partial() const { return *partial_; }

 private:
  std::shared_ptr<const ProbeSuiteReport> partial_;
};

// Sends each probe once (transport retries aside), scores the responses,
// and aggregates per category. Per-probe failures are recorded without
// aborting; only total endpoint unavailability raises ProbeSuiteError.
ProbeSuiteReport run_probe_suite(std::span<const ProbeSpec> probes, ChatClient& client,
                                 const CorpusIndex& corpus, const ProbeParams& params = {});

// Reads line-delimited probe records and materializes them against the
// corpus. Prefix records: {"mode", "target_doc", "k"?, "frame"?,
// "category"?}; direct records: {"mode", "template_id", "work_metadata":
// {"title"?, "author"?}}.
std::vector<ProbeSpec> load_probe_suite(const std::filesystem::path& path,
                                        const CorpusIndex& corpus);

}  // namespace fairuse
