// Reference implementations used only by tests. Each one favors the most
// literal possible reading of the contract over speed, so they double-check
// the optimized library code rather than mirroring it.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

using Tokens = std::vector<std::string>;

// Full-table LCS over token sequences.
inline std::size_t lcs_full_table(const Tokens& a, const Tokens& b) {
  std::vector<std::vector<std::size_t>> table(a.size() + 1,
                                              std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        table[i][j] = table[i - 1][j - 1] + 1;
      } else {
        table[i][j] = std::max(table[i - 1][j], table[i][j - 1]);
      }
    }
  }
  return table[a.size()][b.size()];
}

inline bool is_subsequence(const Tokens& needle, const Tokens& haystack) {
  std::size_t i = 0;
  for (const auto& tok : haystack) {
    if (i < needle.size() && needle[i] == tok) ++i;
  }
  return i == needle.size();
}

// Exponential check: every subsequence of a, tested against b. Only for
// len(a) small; validates lcs_full_table itself.
inline std::size_t lcs_exponential(const Tokens& a, const Tokens& b) {
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << a.size()); ++mask) {
    Tokens sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (std::size_t{1} << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

inline bool run_at(const Tokens& response, std::size_t pos, std::size_t len, const Tokens& doc,
                   std::size_t doc_pos) {
  if (pos + len > response.size() || doc_pos + len > doc.size()) return false;
  for (std::size_t k = 0; k < len; ++k) {
    if (response[pos + k] != doc[doc_pos + k]) return false;
  }
  return true;
}

// Longest contiguous run of the response found contiguously in any document,
// by trying every (position, length, document, document position).
inline std::size_t longest_span_brute(const Tokens& response,
                                      const std::vector<Tokens>& docs) {
  std::size_t best = 0;
  for (std::size_t pos = 0; pos < response.size(); ++pos) {
    for (std::size_t len = 1; pos + len <= response.size(); ++len) {
      bool found = false;
      for (const auto& doc : docs) {
        for (std::size_t dpos = 0; !found && dpos + len <= doc.size(); ++dpos) {
          found = run_at(response, pos, len, doc, dpos);
        }
      }
      if (found) best = std::max(best, len);
    }
  }
  return best;
}

struct TileSpan {
  std::string doc_id;
  std::size_t response_pos = 0;
  std::size_t length = 0;
  std::size_t doc_pos = 0;

  bool operator==(const TileSpan&) const = default;
};

// Greedy longest-match-first tiling by exhaustive candidate enumeration:
// every round scans all (position, length, document, document position)
// quadruples that fit entirely inside uncovered response tokens, picks the
// longest (ties: leftmost position, smallest doc_id, smallest doc position),
// and marks it covered.
inline std::vector<TileSpan> tile_brute(const Tokens& response,
                                        const std::vector<std::pair<std::string, Tokens>>& docs,
                                        std::size_t min_match) {
  std::vector<TileSpan> spans;
  std::vector<bool> covered(response.size(), false);
  while (true) {
    bool have = false;
    TileSpan best;
    for (std::size_t pos = 0; pos < response.size(); ++pos) {
      for (std::size_t len = min_match; pos + len <= response.size(); ++len) {
        bool blocked = false;
        for (std::size_t k = 0; k < len; ++k) blocked = blocked || covered[pos + k];
        if (blocked) break;
        for (const auto& [id, doc] : docs) {
          for (std::size_t dpos = 0; dpos + len <= doc.size(); ++dpos) {
            if (!run_at(response, pos, len, doc, dpos)) continue;
            TileSpan cand{id, pos, len, dpos};
            const bool better =
                !have || cand.length > best.length ||
                (cand.length == best.length &&
                 std::tie(cand.response_pos, cand.doc_id, cand.doc_pos) <
                     std::tie(best.response_pos, best.doc_id, best.doc_pos));
            if (better) {
              best = cand;
              have = true;
            }
          }
        }
      }
    }
    if (!have) break;
    spans.push_back(best);
    for (std::size_t k = 0; k < best.length; ++k) covered[best.response_pos + k] = true;
  }
  std::sort(spans.begin(), spans.end(), [](const TileSpan& x, const TileSpan& y) {
    return x.response_pos < y.response_pos;
  });
  return spans;
}

inline double coverage_brute(const Tokens& response,
                             const std::vector<std::pair<std::string, Tokens>>& docs,
                             std::size_t min_match) {
  if (response.empty()) return 0.0;
  std::size_t total = 0;
  for (const auto& span : tile_brute(response, docs, min_match)) total += span.length;
  return static_cast<double>(total) / static_cast<double>(response.size());
}

// Literal evaluation of log( e^{b*w} / (e^{b*w} + e^{b*l}) ). Overflows for
// large magnitudes, so callers must keep |b*w| and |b*l| modest.
inline double dpo_printed_form(double logp_w, double logp_l, double beta) {
  const double ew = std::exp(beta * logp_w);
  const double el = std::exp(beta * logp_l);
  return std::log(ew / (ew + el));
}

}  // namespace oracle
