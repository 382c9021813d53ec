#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fairuse {

// Text normalization applied before word tokenization. All fields are
// explicit so that two equal configs always produce byte-identical output.
// compose_unicode folds common Latin base + combining-mark sequences into
// their precomposed forms (a compact built-in table; not a full NFC pass).
struct NormalizationConfig {
  bool lowercase = true;
  bool compose_unicode = true;
  bool strip_punctuation = true;
  bool collapse_whitespace = true;

  bool operator==(const NormalizationConfig&) const = default;
};

// A reference work or a model output. Ids are caller-supplied and must be
// unique within a corpus; title/category/source_uri are optional metadata
// (empty string = absent).
struct Document {
  std::string id;
  std::string title;
  std::string text;
  std::string category;
  std::string source_uri;
};

// Byte span [begin, end) into the original (un-normalized) text.
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const TokenSpan&) const = default;
};

// Normalized word tokens plus their byte spans in the source text.
// Invariant: tokens.size() == offsets.size(); spans are strictly increasing
// and non-overlapping; re-normalizing a span yields its token.
struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<TokenSpan> offsets;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  std::span<const std::string> window(std::size_t pos, std::size_t n) const {
    return {tokens.data() + pos, n};
  }
};

std::string normalize(std::string_view text, const NormalizationConfig& config);
TokenSequence tokenize(std::string_view text, const NormalizationConfig& config);

// Immutable bundle of documents with their token sequences. Safe to share
// across threads once constructed.
class CorpusIndex {
 public:
  CorpusIndex() = default;

  // Throws DataError on duplicate or empty document ids.
  static CorpusIndex from_documents(std::vector<Document> docs,
                                    const NormalizationConfig& config = {});

  std::size_t size() const { return docs_.size(); }
  const Document& doc(std::size_t i) const { return docs_[i]; }
  const TokenSequence& tokens(std::size_t i) const { return seqs_[i]; }
  const Document* find(std::string_view id) const;
  const TokenSequence* find_tokens(std::string_view id) const;
  const NormalizationConfig& config() const { return config_; }

 private:
  std::vector<Document> docs_;
  std::vector<TokenSequence> seqs_;
  std::unordered_map<std::string, std::size_t> by_id_;
  NormalizationConfig config_;
};

// Loads a line-delimited corpus file ({"id","title"?,"text","category"?,
// "source_uri"?} per line, UTF-8). Throws DataError with the offending line
// number on malformed records or duplicate ids.
CorpusIndex load_corpus(const std::filesystem::path& path, const NormalizationConfig& config = {});

// Exact-match index over all length-n token windows of a corpus. Entries
// name documents by ordinal; doc_id() maps back to the registered id.
class NGramIndex {
 public:
  struct Entry {
    std::uint32_t doc = 0;  // ordinal of the registered document
    std::uint32_t position = 0;

    bool operator==(const Entry&) const = default;
  };

  explicit NGramIndex(std::size_t n);  // throws std::invalid_argument when n == 0

  std::size_t n() const { return n_; }
  void add_document(const std::string& doc_id, const TokenSequence& seq);

  // Postings for a window of exactly n tokens, or nullptr when absent.
  const std::vector<Entry>* find(std::span<const std::string> window) const;

  const std::string& doc_id(std::uint32_t ordinal) const { return doc_ids_[ordinal]; }
  std::size_t doc_count() const { return doc_ids_.size(); }

  std::size_t entry_count() const;
  const std::unordered_map<std::string, std::vector<Entry>>& entries() const { return map_; }

  static std::string make_key(std::span<const std::string> window);

 private:
  std::size_t n_;
  std::vector<std::string> doc_ids_;
  std::unordered_map<std::string, std::vector<Entry>> map_;
};

NGramIndex build_ngram_index(const CorpusIndex& corpus, std::size_t n);

}  // namespace fairuse
