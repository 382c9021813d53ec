#pragma once

#include "fairuse/textcorpus.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fairuse {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// One verbatim match of the response against an indexed document.
struct NGramHit {
  std::string doc_id;
  std::size_t response_pos = 0;
  std::size_t doc_pos = 0;
  std::size_t length = 0;

  bool operator==(const NGramHit&) const = default;
};

// A contiguous verbatim segment selected by the coverage tiling.
struct VerbatimSpan {
  std::string doc_id;
  std::size_t response_pos = 0;
  std::size_t length = 0;
  std::size_t doc_pos = 0;
};

struct OverlapParams {
  std::size_t min_match = 3;  // shortest verbatim segment to count
  double rouge_beta = 1.0;
};

// Reuse measurements of one response against reference material. LCS and
// ROUGE-L are computed against the single best-matching document; spans and
// coverage scan the whole corpus.
struct OverlapReport {
  std::size_t lcs_len = 0;
  double lcs_norm = 0.0;  // lcs_len / len(response), 0 for empty responses
  RougeScore rouge;
  std::string best_doc_id;  // document the LCS/ROUGE columns refer to
  std::vector<VerbatimSpan> verbatim_spans;
  double coverage = 0.0;
  std::size_t longest_span = 0;
};

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b);

// ROUGE-L: precision = lcs/|candidate|, recall = lcs/|reference|, and the
// weighted F measure (1+b^2)PR / (R + b^2 P). Empty candidate or reference
// yields all zeros.
RougeScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference,
                   double beta = 1.0);

// All response windows of length index.n() present in the index, ordered by
// ascending response position, then doc_id, then doc position.
std::vector<NGramHit> ngram_hits(const TokenSequence& response, const NGramIndex& index);

// Greedy longest-match-first tiling of the response with non-overlapping
// verbatim segments (length >= min_match) found anywhere in the corpus.
// Ties break toward the leftmost response position, then the smallest
// doc_id. The optional prebuilt index must have n == min_match and must
// have been built over the same corpus.
std::vector<VerbatimSpan> tile_verbatim_spans(const TokenSequence& response,
                                              const CorpusIndex& corpus, std::size_t min_match);
std::vector<VerbatimSpan> tile_verbatim_spans(const TokenSequence& response,
                                              const CorpusIndex& corpus,
                                              const NGramIndex& seed_index);

// Fraction of response tokens covered by the tiling above; 0 for an empty
// response. min_match must be >= 1.
double reuse_coverage(const TokenSequence& response, const CorpusIndex& corpus,
                      std::size_t min_match);
double reuse_coverage(const TokenSequence& response, const CorpusIndex& corpus,
                      const NGramIndex& seed_index);

// Length of the longest contiguous token run of the response that occurs
// contiguously in any corpus document; 0 when none.
std::size_t longest_verbatim_span(const TokenSequence& response, const CorpusIndex& corpus);

OverlapReport analyze_overlap(const TokenSequence& response, const CorpusIndex& corpus,
                              const OverlapParams& params = {});

}  // namespace fairuse
