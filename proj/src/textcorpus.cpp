#include "fairuse/textcorpus.hpp"

#include "fairuse/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <fstream>
#include <stdexcept>
#include <utility>

namespace fairuse {
namespace {

using json = nlohmann::json;

// --- minimal UTF-8 codec -------------------------------------------------

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one codepoint starting at text[i]; advances i past it. Invalid
// bytes decode to U+FFFD one byte at a time so offsets stay consistent.
char32_t decode_utf8(std::string_view text, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(text[k]); };
  unsigned char b0 = byte(i);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return kReplacement;
  }
  if (i + len > text.size()) {
    ++i;
    return kReplacement;
  }
  for (std::size_t k = 1; k < len; ++k) {
    unsigned char bk = byte(i + k);
    if ((bk & 0xC0) != 0x80) {
      ++i;
      return kReplacement;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += len;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// --- character classes ---------------------------------------------------

bool is_space_cp(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case 0x0B:
    case 0x0C:
    case 0x00A0:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return (cp >= 0x2000 && cp <= 0x200A);
  }
}

bool is_punct_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '!' && cp <= '/') || (cp >= ':' && cp <= '@') || (cp >= '[' && cp <= '`') ||
           (cp >= '{' && cp <= '~');
  }
  switch (cp) {
    case 0x00A1:  // inverted exclamation
    case 0x00AB:  // left guillemet
    case 0x00BB:  // right guillemet
    case 0x00BF:  // inverted question mark
    case 0x2026:  // ellipsis
    case 0x2039:
    case 0x203A:
      return true;
    default:
      return (cp >= 0x2010 && cp <= 0x2015) ||  // hyphens and dashes
             (cp >= 0x2018 && cp <= 0x201F);    // curly quotes
  }
}

char32_t to_lower_cp(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  // Latin-1 uppercase block, skipping the multiplication sign.
  if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 32;
  return cp;
}

// Canonical composition for the Latin-1 precomposed repertoire: base letter
// followed by a combining mark in U+0300..U+0327. Pairs without a mapping
// are left untouched.
char32_t compose_pair(char32_t base, char32_t mark) {
  struct Row {
    char32_t mark;
    const char* bases;        // ASCII base letters
    const char32_t* composed; // parallel precomposed codepoints
  };
  static constexpr char32_t kGrave[] = {0xC0, 0xC8, 0xCC, 0xD2, 0xD9, 0xE0, 0xE8, 0xEC, 0xF2, 0xF9};
  static constexpr char32_t kAcute[] = {0xC1, 0xC9, 0xCD, 0xD3, 0xDA, 0xDD,
                                        0xE1, 0xE9, 0xED, 0xF3, 0xFA, 0xFD};
  static constexpr char32_t kCirc[] = {0xC2, 0xCA, 0xCE, 0xD4, 0xDB, 0xE2, 0xEA, 0xEE, 0xF4, 0xFB};
  static constexpr char32_t kTilde[] = {0xC3, 0xD1, 0xD5, 0xE3, 0xF1, 0xF5};
  static constexpr char32_t kDiaer[] = {0xC4, 0xCB, 0xCF, 0xD6, 0xDC,
                                        0xE4, 0xEB, 0xEF, 0xF6, 0xFC, 0xFF};
  static constexpr char32_t kRing[] = {0xC5, 0xE5};
  static constexpr char32_t kCedilla[] = {0xC7, 0xE7};
  static constexpr Row kRows[] = {
      {0x0300, "AEIOUaeiou", kGrave},        {0x0301, "AEIOUYaeiouy", kAcute},
      {0x0302, "AEIOUaeiou", kCirc},         {0x0303, "ANOano", kTilde},
      {0x0308, "AEIOUaeiouy", kDiaer},       {0x030A, "Aa", kRing},
      {0x0327, "Cc", kCedilla},
  };
  for (const Row& row : kRows) {
    if (row.mark != mark) continue;
    for (std::size_t i = 0; row.bases[i] != '\0'; ++i) {
      if (static_cast<char32_t>(row.bases[i]) == base) return row.composed[i];
    }
  }
  return 0;
}

std::vector<char32_t> decode_all(std::string_view text) {
  std::vector<char32_t> cps;
  cps.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) cps.push_back(decode_utf8(text, i));
  return cps;
}

}  // namespace

std::string normalize(std::string_view text, const NormalizationConfig& config) {
  std::vector<char32_t> cps = decode_all(text);

  if (config.compose_unicode) {
    std::vector<char32_t> composed;
    composed.reserve(cps.size());
    for (std::size_t i = 0; i < cps.size(); ++i) {
      if (i + 1 < cps.size()) {
        if (char32_t c = compose_pair(cps[i], cps[i + 1]); c != 0) {
          composed.push_back(c);
          ++i;
          continue;
        }
      }
      composed.push_back(cps[i]);
    }
    cps = std::move(composed);
  }

  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  bool emitted_any = false;
  for (char32_t cp : cps) {
    if (config.lowercase) cp = to_lower_cp(cp);
    if (config.strip_punctuation && is_punct_cp(cp)) continue;
    if (is_space_cp(cp)) {
      if (config.collapse_whitespace) {
        pending_space = true;  // trimmed at the edges, single space inside
        continue;
      }
      encode_utf8(cp, out);
      continue;
    }
    if (pending_space && emitted_any) out.push_back(' ');
    pending_space = false;
    emitted_any = true;
    encode_utf8(cp, out);
  }
  return out;
}

TokenSequence tokenize(std::string_view text, const NormalizationConfig& config) {
  TokenSequence seq;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t probe = i;
    char32_t cp = decode_utf8(text, probe);
    if (is_space_cp(cp)) {
      i = probe;
      continue;
    }
    // Chunk: maximal run of non-whitespace codepoints.
    std::size_t begin = i;
    std::size_t end = probe;
    while (end < text.size()) {
      std::size_t next = end;
      char32_t c = decode_utf8(text, next);
      if (is_space_cp(c)) break;
      end = next;
    }
    std::string token = normalize(text.substr(begin, end - begin), config);
    if (!token.empty()) {
      seq.tokens.push_back(std::move(token));
      seq.offsets.push_back({begin, end});
    }
    i = end;
  }
  return seq;
}

CorpusIndex CorpusIndex::from_documents(std::vector<Document> docs,
                                        const NormalizationConfig& config) {
  CorpusIndex corpus;
  corpus.config_ = config;
  corpus.docs_ = std::move(docs);
  corpus.seqs_.reserve(corpus.docs_.size());
  for (std::size_t i = 0; i < corpus.docs_.size(); ++i) {
    const Document& d = corpus.docs_[i];
    if (d.id.empty()) throw DataError("document with empty id");
    if (!corpus.by_id_.emplace(d.id, i).second) {
      throw DataError("duplicate document id \"" + d.id + "\"");
    }
    corpus.seqs_.push_back(tokenize(d.text, config));
  }
  return corpus;
}

const Document* CorpusIndex::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &docs_[it->second];
}

const TokenSequence* CorpusIndex::find_tokens(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &seqs_[it->second];
}

CorpusIndex load_corpus(const std::filesystem::path& path, const NormalizationConfig& config) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file: " + path.string());

  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> seen;  // id -> line
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      throw DataError("malformed corpus record", line_no);
    }
    if (!rec.contains("id") || !rec["id"].is_string()) {
      throw DataError("missing string field \"id\"", line_no);
    }
    if (!rec.contains("text") || !rec["text"].is_string()) {
      throw DataError("missing string field \"text\"", line_no);
    }
    Document doc;
    doc.id = rec["id"].get<std::string>();
    doc.text = rec["text"].get<std::string>();
    if (doc.id.empty()) throw DataError("empty document id", line_no);
    if (auto [it, inserted] = seen.emplace(doc.id, line_no); !inserted) {
      throw DataError("duplicate document id \"" + doc.id + "\" (first seen on line " +
                          std::to_string(it->second) + ")",
                      line_no);
    }
    if (rec.contains("title") && rec["title"].is_string()) doc.title = rec["title"];
    if (rec.contains("category") && rec["category"].is_string()) doc.category = rec["category"];
    if (rec.contains("source_uri") && rec["source_uri"].is_string())
      doc.source_uri = rec["source_uri"];
    docs.push_back(std::move(doc));
  }
  return CorpusIndex::from_documents(std::move(docs), config);
}

NGramIndex::NGramIndex(std::size_t n) : n_(n) {
  if (n == 0) throw std::invalid_argument("n-gram window size must be >= 1");
}

std::string NGramIndex::make_key(std::span<const std::string> window) {
  std::string key;
  for (const std::string& tok : window) {
    if (!key.empty()) key.push_back('\x1f');  // tokens never contain whitespace or controls
    key += tok;
  }
  return key;
}

void NGramIndex::add_document(const std::string& doc_id, const TokenSequence& seq) {
  const auto ordinal = static_cast<std::uint32_t>(doc_ids_.size());
  doc_ids_.push_back(doc_id);
  if (seq.size() < n_) return;
  for (std::size_t pos = 0; pos + n_ <= seq.size(); ++pos) {
    map_[make_key(seq.window(pos, n_))].push_back({ordinal, static_cast<std::uint32_t>(pos)});
  }
}

const std::vector<NGramIndex::Entry>* NGramIndex::find(
    std::span<const std::string> window) const {
  auto it = map_.find(make_key(window));
  return it == map_.end() ? nullptr : &it->second;
}

std::size_t NGramIndex::entry_count() const {
  std::size_t total = 0;
  for (const auto& [key, postings] : map_) total += postings.size();
  return total;
}

NGramIndex build_ngram_index(const CorpusIndex& corpus, std::size_t n) {
  NGramIndex index(n);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    index.add_document(corpus.doc(i).id, corpus.tokens(i));
  }
  return index;
}

}  // namespace fairuse
