#include "fairuse/prefdata.hpp"

#include "fairuse/categories.hpp"
#include "fairuse/errors.hpp"
#include "fairuse/textcorpus.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace fairuse {

namespace {

using json = nlohmann::json;

// Fetches a required non-empty string field, appending an issue otherwise.
bool read_text_field(const json& rec, const char* name, std::size_t line, std::string& out,
                     std::vector<ValidationIssue>& errors) {
  if (!rec.contains(name) || !rec[name].is_string()) {
    errors.push_back({line, std::string("missing string field \"") + name + "\""});
    return false;
  }
  out = rec[name].get<std::string>();
  if (out.empty()) {
    errors.push_back({line, std::string("field \"") + name + "\" must be non-empty"});
    return false;
  }
  return true;
}

}  // namespace

ValidationReport validate_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset file: " + path.string());

  ValidationReport report;
  // Key: normalized x|y_w|y_l; value: first line carrying it.
  std::unordered_map<std::string, std::size_t> seen;
  const NormalizationConfig norm;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;

    json rec = json::parse(line, nullptr, false);
    if (rec.is_discarded() || !rec.is_object()) {
      report.errors.push_back({line_no, "malformed record: not a JSON object"});
      continue;
    }

    const std::size_t errors_before = report.errors.size();
    PreferenceTriple triple;
    const bool have_x = read_text_field(rec, "x", line_no, triple.x, report.errors);
    const bool have_w = read_text_field(rec, "y_w", line_no, triple.y_w, report.errors);
    const bool have_l = read_text_field(rec, "y_l", line_no, triple.y_l, report.errors);

    if (have_w && have_l && triple.y_w == triple.y_l) {
      report.errors.push_back({line_no, "y_w and y_l must differ"});
    }

    if (!rec.contains("category") || !rec["category"].is_string()) {
      report.errors.push_back({line_no, "missing string field \"category\""});
    } else {
      triple.category = rec["category"].get<std::string>();
      if (find_category(triple.category) == nullptr) {
        report.errors.push_back({line_no, "unknown category \"" + triple.category +
                                              "\"; known categories: " +
                                              known_category_names()});
      }
    }

    if (rec.contains("provenance")) {
      const auto& prov = rec["provenance"];
      if (!prov.is_object()) {
        report.errors.push_back({line_no, "field \"provenance\" must be an object"});
      } else {
        auto read_opt = [&](const char* name, std::string& out) {
          if (!prov.contains(name)) return;
          if (!prov[name].is_string()) {
            report.errors.push_back(
                {line_no, std::string("provenance field \"") + name + "\" must be a string"});
            return;
          }
          out = prov[name].get<std::string>();
        };
        read_opt("chosen_source", triple.provenance.chosen_source);
        read_opt("rejected_source", triple.provenance.rejected_source);
        read_opt("annotator_id", triple.provenance.annotator_id);
      }
    }

    if (have_x && have_w && have_l) {
      const std::string key = normalize(triple.x, norm) + '\x1f' + normalize(triple.y_w, norm) +
                              '\x1f' + normalize(triple.y_l, norm);
      if (auto [it, inserted] = seen.emplace(key, line_no); !inserted) {
        report.errors.push_back({line_no, "duplicate of the triple on line " +
                                              std::to_string(it->second)});
      }
    }

    if (report.errors.size() == errors_before) {
      ++report.n_valid;
      report.valid.push_back(std::move(triple));
    }
  }
  return report;
}

DatasetStats dataset_stats(std::span<const PreferenceTriple> triples) {
  if (triples.empty()) throw std::invalid_argument("dataset_stats needs at least one triple");

  DatasetStats stats;
  for (const auto& info : categories()) stats.per_category[std::string(info.name)] = 0;

  const NormalizationConfig norm;
  std::vector<double> x_len, w_len, l_len;
  x_len.reserve(triples.size());
  w_len.reserve(triples.size());
  l_len.reserve(triples.size());
  for (const auto& triple : triples) {
    ++stats.per_category[triple.category];
    x_len.push_back(static_cast<double>(tokenize(triple.x, norm).size()));
    w_len.push_back(static_cast<double>(tokenize(triple.y_w, norm).size()));
    l_len.push_back(static_cast<double>(tokenize(triple.y_l, norm).size()));
  }
  stats.x_length = aggregate(x_len);
  stats.y_w_length = aggregate(w_len);
  stats.y_l_length = aggregate(l_len);
  return stats;
}

double dpo_loss(const DpoInputs& inputs) {
  if (!std::isfinite(inputs.logp_w) || !std::isfinite(inputs.logp_l) ||
      !std::isfinite(inputs.beta_d)) {
    throw std::invalid_argument("dpo_loss inputs must be finite");
  }
  if (!(inputs.beta_d > 0.0)) throw std::invalid_argument("beta_d must be > 0");

  // log sigmoid(z) with z = beta * margin, branch chosen so the exp never
  // overflows.
  const double z = inputs.beta_d * (inputs.logp_w - inputs.logp_l);
  if (z >= 0.0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

double dpo_batch_loss(std::span<const DpoInputs> batch) {
  if (batch.empty()) throw std::invalid_argument("dpo_batch_loss needs a non-empty batch");
  double sum = 0.0;
  for (const auto& inputs : batch) sum += dpo_loss(inputs);
  return sum / static_cast<double>(batch.size());
}

}  // namespace fairuse
