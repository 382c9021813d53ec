#pragma once

#include "fairuse/textcorpus.hpp"

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace testutil {

inline std::string join(const std::vector<std::string>& tokens) {
  std::string text;
  for (const auto& tok : tokens) {
    if (!text.empty()) text.push_back(' ');
    text += tok;
  }
  return text;
}

// Builds a TokenSequence whose tokens are exactly the given words. Words must
// already be in normalized form (lowercase, no punctuation).
inline fairuse::TokenSequence make_seq(const std::vector<std::string>& tokens) {
  return fairuse::tokenize(join(tokens), {});
}

inline fairuse::CorpusIndex make_corpus(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& docs) {
  std::vector<fairuse::Document> out;
  for (const auto& [id, tokens] : docs) {
    fairuse::Document doc;
    doc.id = id;
    doc.text = join(tokens);
    out.push_back(std::move(doc));
  }
  return fairuse::CorpusIndex::from_documents(std::move(out), {});
}

// Random token drawn from a small alphabet; small alphabets make verbatim
// collisions frequent, which is what the overlap tests need.
inline std::vector<std::string> random_tokens(std::mt19937& rng, std::size_t max_len,
                                              std::size_t alphabet = 4) {
  std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
  std::uniform_int_distribution<std::size_t> sym_dist(0, alphabet - 1);
  std::vector<std::string> tokens(len_dist(rng));
  for (auto& tok : tokens) tok = std::string(1, static_cast<char>('a' + sym_dist(rng)));
  return tokens;
}

}  // namespace testutil
