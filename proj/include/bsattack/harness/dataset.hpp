#pragma once

#include <bsattack/errors.hpp>
#include <bsattack/model/train.hpp>
#include <bsattack/vocab/vocabulary.hpp>

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace bsattack {

struct LabeledRecord {
  std::string text;
  std::size_t label = 0;

  friend bool operator==(const LabeledRecord&, const LabeledRecord&) = default;
};

struct LabeledDataset {
  std::vector<LabeledRecord> records;
  std::vector<std::string> class_names;
  std::string split;  // "train" / "test"

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  std::size_t num_classes() const {
    std::size_t c = class_names.size();
    for (const auto& r : records) c = std::max(c, r.label + 1);
    return c;
  }

  std::vector<std::string> texts() const {
    std::vector<std::string> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.text);
    return out;
  }
};

/// Parses JSON lines of the form {"text": ..., "label": ...}. Blank lines are
/// skipped. Errors name the 1-based line number.
inline LabeledDataset parse_dataset(std::istream& in, std::optional<std::size_t> num_classes = {},
                                    const std::string& source = "dataset") {
  LabeledDataset ds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(where + "malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw FormatError(where + "expected a JSON object");
    if (!j.contains("text") || !j["text"].is_string()) {
      throw FormatError(where + "missing string field \"text\"");
    }
    if (!j.contains("label") || !j["label"].is_number_integer()) {
      throw FormatError(where + "missing integer field \"label\"");
    }
    const auto label = j["label"].get<long long>();
    if (label < 0 || (num_classes && static_cast<std::size_t>(label) >= *num_classes)) {
      throw FormatError(where + "label " + std::to_string(label) + " out of range");
    }
    ds.records.push_back({j["text"].get<std::string>(), static_cast<std::size_t>(label)});
  }
  return ds;
}

inline LabeledDataset load_dataset(const std::string& path,
                                   std::optional<std::size_t> num_classes = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read dataset " + path);
  return parse_dataset(in, num_classes, path);
}

inline void save_dataset(const std::string& path, const LabeledDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset " + path);
  for (const auto& r : ds.records) {
    nlohmann::json j;
    j["text"] = r.text;
    j["label"] = r.label;
    out << j.dump() << '\n';
  }
}

/// Tokenized records, truncated to `max_length` tokens.
inline std::vector<LabeledSequence> tokenize_dataset(const LabeledDataset& ds, const Vocabulary& vocab,
                                                     std::size_t max_length) {
  std::vector<LabeledSequence> out;
  out.reserve(ds.size());
  for (const auto& r : ds.records) {
    TokenSequence seq = tokenize(r.text, vocab);
    if (seq.size() > max_length) seq.ids.resize(max_length);
    out.push_back({std::move(seq), r.label});
  }
  return out;
}

}  // namespace bsattack
