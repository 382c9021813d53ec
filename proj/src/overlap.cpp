#include "fairuse/overlap.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace fairuse {

namespace {

// Longest contiguous common run between two token sequences (two-row DP over
// common-suffix lengths). Predictable O(|a|*|b|) regardless of token
// frequency skew, unlike unigram seed-and-extend.
std::size_t longest_common_run(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return best;
}

std::span<const std::string> as_span(const TokenSequence& seq) {
  return {seq.tokens.data(), seq.tokens.size()};
}

}  // namespace

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  if (b.size() > a.size()) std::swap(a, b);  // keep the DP rows on the shorter side
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t lcs_length(const TokenSequence& a, const TokenSequence& b) {
  return lcs_length(as_span(a), as_span(b));
}

RougeScore rouge_l(const TokenSequence& candidate, const TokenSequence& reference, double beta) {
  RougeScore score;
  if (candidate.empty() || reference.empty()) return score;
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  score.precision = lcs / static_cast<double>(candidate.size());
  score.recall = lcs / static_cast<double>(reference.size());
  const double b2 = beta * beta;
  const double denom = score.recall + b2 * score.precision;
  if (denom > 0.0) score.f1 = (1.0 + b2) * score.precision * score.recall / denom;
  return score;
}

std::vector<NGramHit> ngram_hits(const TokenSequence& response, const NGramIndex& index) {
  std::vector<NGramHit> hits;
  const std::size_t n = index.n();
  if (response.size() < n) return hits;
  for (std::size_t pos = 0; pos + n <= response.size(); ++pos) {
    const auto* entries = index.find(response.window(pos, n));
    if (entries == nullptr) continue;
    for (const auto& entry : *entries) {
      hits.push_back({index.doc_id(entry.doc), pos, entry.position, n});
    }
  }
  std::sort(hits.begin(), hits.end(), [](const NGramHit& x, const NGramHit& y) {
    return std::tie(x.response_pos, x.doc_id, x.doc_pos) <
           std::tie(y.response_pos, y.doc_id, y.doc_pos);
  });
  return hits;
}

std::vector<VerbatimSpan> tile_verbatim_spans(const TokenSequence& response,
                                              const CorpusIndex& corpus,
                                              const NGramIndex& seed_index) {
  const std::size_t min_match = seed_index.n();
  std::vector<VerbatimSpan> spans;
  if (response.size() < min_match) return spans;

  std::vector<bool> covered(response.size(), false);
  const auto& tokens = response.tokens;

  // Each round picks the longest verbatim match that fits entirely inside an
  // uncovered region; ties go to the leftmost response position, then the
  // smallest doc_id, then the smallest position within that document.
  while (true) {
    std::size_t best_len = 0;
    std::size_t best_pos = 0;
    std::size_t best_doc_pos = 0;
    const std::string* best_doc = nullptr;

    std::size_t gap_start = 0;
    while (gap_start < response.size()) {
      if (covered[gap_start]) {
        ++gap_start;
        continue;
      }
      std::size_t gap_end = gap_start;
      while (gap_end < response.size() && !covered[gap_end]) ++gap_end;

      for (std::size_t pos = gap_start; pos + min_match <= gap_end; ++pos) {
        const std::size_t limit = gap_end - pos;
        const auto* entries = seed_index.find(response.window(pos, min_match));
        if (entries == nullptr) continue;
        for (const auto& entry : *entries) {
          const auto& doc = corpus.tokens(entry.doc).tokens;
          std::size_t len = min_match;
          while (len < limit && entry.position + len < doc.size() &&
                 tokens[pos + len] == doc[entry.position + len]) {
            ++len;
          }
          const auto& id = corpus.doc(entry.doc).id;
          const bool better =
              len > best_len ||
              (len == best_len && best_doc != nullptr &&
               std::tie(pos, id, entry.position) < std::tie(best_pos, *best_doc, best_doc_pos));
          if (better) {
            best_len = len;
            best_pos = pos;
            best_doc = &id;
            best_doc_pos = entry.position;
          }
        }
      }
      gap_start = gap_end;
    }

    if (best_len == 0) break;
    spans.push_back({*best_doc, best_pos, best_len, best_doc_pos});
    std::fill_n(covered.begin() + static_cast<std::ptrdiff_t>(best_pos), best_len, true);
  }

  std::sort(spans.begin(), spans.end(), [](const VerbatimSpan& x, const VerbatimSpan& y) {
    return x.response_pos < y.response_pos;
  });
  return spans;
}

std::vector<VerbatimSpan> tile_verbatim_spans(const TokenSequence& response,
                                              const CorpusIndex& corpus, std::size_t min_match) {
  if (min_match == 0) throw std::invalid_argument("min_match must be >= 1");
  return tile_verbatim_spans(response, corpus, build_ngram_index(corpus, min_match));
}

namespace {

double coverage_fraction(const TokenSequence& response, const std::vector<VerbatimSpan>& spans) {
  if (response.empty()) return 0.0;
  std::size_t covered = 0;
  for (const auto& span : spans) covered += span.length;
  return static_cast<double>(covered) / static_cast<double>(response.size());
}

}  // namespace

double reuse_coverage(const TokenSequence& response, const CorpusIndex& corpus,
                      std::size_t min_match) {
  if (min_match == 0) throw std::invalid_argument("min_match must be >= 1");
  return coverage_fraction(response, tile_verbatim_spans(response, corpus, min_match));
}

double reuse_coverage(const TokenSequence& response, const CorpusIndex& corpus,
                      const NGramIndex& seed_index) {
  return coverage_fraction(response, tile_verbatim_spans(response, corpus, seed_index));
}

std::size_t longest_verbatim_span(const TokenSequence& response, const CorpusIndex& corpus) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    best = std::max(best, longest_common_run(as_span(response), as_span(corpus.tokens(i))));
  }
  return best;
}

OverlapReport analyze_overlap(const TokenSequence& response, const CorpusIndex& corpus,
                              const OverlapParams& params) {
  if (params.min_match == 0) throw std::invalid_argument("min_match must be >= 1");
  OverlapReport report;
  if (corpus.size() == 0) return report;

  // LCS and ROUGE-L are reported against the best-matching document; the
  // tie break on equal LCS is the smallest doc_id.
  std::size_t best_doc = 0;
  std::size_t best_lcs = 0;
  bool have_best = false;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::size_t lcs = lcs_length(response, corpus.tokens(i));
    const bool better = !have_best || lcs > best_lcs ||
                        (lcs == best_lcs && corpus.doc(i).id < corpus.doc(best_doc).id);
    if (better) {
      best_doc = i;
      best_lcs = lcs;
      have_best = true;
    }
  }

  report.lcs_len = best_lcs;
  report.lcs_norm =
      response.empty() ? 0.0
                       : static_cast<double>(best_lcs) / static_cast<double>(response.size());
  report.rouge = rouge_l(response, corpus.tokens(best_doc), params.rouge_beta);
  report.best_doc_id = corpus.doc(best_doc).id;
  report.verbatim_spans = tile_verbatim_spans(response, corpus, params.min_match);
  report.coverage = coverage_fraction(response, report.verbatim_spans);
  report.longest_span = longest_verbatim_span(response, corpus);
  return report;
}

}  // namespace fairuse
