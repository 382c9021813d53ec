#pragma once

#include "fairuse/metrics.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace fairuse {

struct Provenance {
  std::string chosen_source;
  std::string rejected_source;
  std::string annotator_id;  // optional, empty when absent
};

// One preference triple: prompt x with a chosen (y_w) and rejected (y_l)
// response. All three texts non-empty, y_w != y_l, category from the closed
// taxonomy.
struct PreferenceTriple {
  std::string x;
  std::string y_w;
  std::string y_l;
  std::string category;
  Provenance provenance;
};

struct ValidationIssue {
  std::size_t line = 0;
  std::string reason;
};

struct ValidationReport {
  std::size_t n_valid = 0;
  std::vector<ValidationIssue> errors;   // every violation, with line numbers
  std::vector<PreferenceTriple> valid;   // records that passed all checks
};

// Streams a JSONL dataset and checks every record against the triple
// invariants plus exact-duplicate detection over normalized (x, y_w, y_l).
// Records all violations instead of stopping at the first; throws only when
// the file cannot be read.
ValidationReport validate_dataset(const std::filesystem::path& path);

struct DatasetStats {
  std::map<std::string, std::size_t> per_category;  // all nine ids, zeros kept
  AggregateStats x_length;
  AggregateStats y_w_length;
  AggregateStats y_l_length;
};

// Category counts plus token-length distributions; the collection must be
// non-empty and already validated.
DatasetStats dataset_stats(std::span<const PreferenceTriple> triples);

// Inputs to the preference objective: log-probabilities of the chosen and
// rejected responses under the policy, and the temperature beta_d > 0.
struct DpoInputs {
  double logp_w = 0.0;
  double logp_l = 0.0;
  double beta_d = 1.0;
};

// log( e^{b*logp_w} / (e^{b*logp_w} + e^{b*logp_l}) ), evaluated as the
// log-sigmoid of b*(logp_w - logp_l) so large margins stay finite. Always
// <= 0. Note this objective has no reference-policy term; common preference
// objectives divide each policy probability by a frozen reference model's.
double dpo_loss(const DpoInputs& inputs);

// Arithmetic mean of dpo_loss over a non-empty batch.
double dpo_batch_loss(std::span<const DpoInputs> batch);

}  // namespace fairuse
