#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "fact/models/encoder.hpp"
#include "fact/verdata/frames.hpp"

namespace fact::verdata {

// -- rule-based gold labels for synthetic corpora -------------------------

enum class VerbClass { Factive, Implicative, Neutral };

/// Signature-lexicon label: factives are +2.5 under both polarities,
/// implicatives match the matrix polarity, everything else is 0.
inline double rule_gold(VerbClass cls, Polarity polarity) {
  switch (cls) {
    case VerbClass::Factive: return 2.5;
    case VerbClass::Implicative:
      return polarity == Polarity::Positive ? 2.5 : -2.5;
    case VerbClass::Neutral: return 0.0;
  }
  return 0.0;
}

inline VerbClass verb_class(const std::string& lemma) {
  static const std::unordered_set<std::string> factive = {
      "know", "realize", "discover", "notice", "admit", "acknowledge",
      "remember", "forget", "regret"};
  static const std::unordered_set<std::string> implicative = {
      "manage", "dare", "bother", "remember", "happen", "turn"};
  if (factive.count(lemma)) return VerbClass::Factive;
  if (implicative.count(lemma)) return VerbClass::Implicative;
  return VerbClass::Neutral;
}

// -- dataset construction --------------------------------------------------

struct VerbFramePair {
  std::string verb;
  std::string frame_id;
};

/// Renders both polarities for every (verb, frame) pair and applies the
/// indefinite substitution, so output size is exactly twice the input size.
inline std::vector<RenderedSentence> generate_dataset(
    const std::vector<VerbFramePair>& pairs) {
  std::vector<RenderedSentence> out;
  out.reserve(pairs.size() * 2);
  std::unordered_set<std::string> seen;
  for (const auto& pair : pairs) {
    const FrameSpec& frame = frame_by_id(pair.frame_id);
    for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
      RenderedSentence s =
          substitute_indefinites(render_sentence(pair.verb, frame, pol));
      if (!seen.insert(s.id()).second)
        throw validation_error("generate_dataset: duplicate sentence id " +
                               s.id());
      out.push_back(std::move(s));
    }
  }
  return out;
}

/// The frame's substituted token skeleton with the verb slot left as "{V}".
/// head_of is verb-independent, so loaders use this to rebuild trees.
inline RenderedSentence substituted_template(const FrameSpec& frame,
                                             Polarity polarity) {
  const PolarityTemplate& tpl = frame.for_polarity(polarity);
  RenderedSentence s;
  s.verb = "{V}";
  s.frame_id = frame.id;
  s.polarity = polarity;
  s.tokens = tpl.tokens;
  s.head_of = tpl.head_of;
  s.verb_index = tpl.verb_index;
  s.target_index = tpl.target_index;
  s.question = frame.question;
  return substitute_indefinites(s);
}

inline models::SentenceInput to_sentence_input(const RenderedSentence& s) {
  models::SentenceInput in;
  in.tokens = s.tokens;
  in.head_of = s.head_of;
  in.target_index = s.target_index;
  return in;
}

// -- TSV I/O ----------------------------------------------------------------

namespace tsv {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

inline std::vector<std::string> split_tokens(const std::string& s) {
  return split(s, ' ');
}

}  // namespace tsv

/// One row of the dataset TSV (the MegaVeridicality-style release format).
struct DatasetRow {
  std::string sentence_id;
  std::string verb;
  std::string frame_id;
  Polarity polarity = Polarity::Positive;
  std::string sentence;
  std::size_t verb_index = 0;
  std::size_t target_index = 0;
  std::string question;
  double gold_factuality = 0.0;
};

inline const char* kDatasetHeader =
    "sentence_id\tverb\tframe_id\tpolarity\tsentence\tverb_index\t"
    "target_index\tquestion\tgold_factuality";

inline DatasetRow dataset_row_from(const RenderedSentence& s, double gold) {
  DatasetRow r;
  r.sentence_id = s.id();
  r.verb = s.verb;
  r.frame_id = s.frame_id;
  r.polarity = s.polarity;
  r.sentence = s.text();
  r.verb_index = s.verb_index;
  r.target_index = s.target_index;
  r.question = s.question;
  r.gold_factuality = gold;
  return r;
}

inline void write_dataset_tsv(const std::string& path,
                              const std::vector<DatasetRow>& rows) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << kDatasetHeader << "\n";
  for (const auto& r : rows) {
    std::ostringstream line;
    line.precision(17);
    line << r.sentence_id << '\t' << r.verb << '\t' << r.frame_id << '\t'
         << polarity_name(r.polarity) << '\t' << r.sentence << '\t'
         << r.verb_index << '\t' << r.target_index << '\t' << r.question
         << '\t' << r.gold_factuality;
    out << line.str() << "\n";
  }
}

/// Loads the dataset TSV. An empty file (or header only) yields an empty
/// dataset; a malformed row is an error naming the line.
inline std::vector<DatasetRow> load_megaveridicality(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open dataset file: " + path);
  std::vector<DatasetRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kDatasetHeader)
        throw io_error(path + ":1: unexpected dataset header");
      continue;
    }
    auto fields = tsv::split(line, '\t');
    if (fields.size() != 9)
      throw io_error(path + ":" + std::to_string(line_no) +
                     ": expected 9 fields, got " +
                     std::to_string(fields.size()));
    try {
      DatasetRow r;
      r.sentence_id = fields[0];
      r.verb = fields[1];
      r.frame_id = fields[2];
      r.polarity = polarity_from_name(fields[3]);
      r.sentence = fields[4];
      r.verb_index = std::stoul(fields[5]);
      r.target_index = std::stoul(fields[6]);
      r.question = fields[7];
      r.gold_factuality = std::stod(fields[8]);
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw io_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

/// SentenceInput for a dataset row, rebuilding head_of from the row's frame
/// skeleton (the templates are closed-class; only the verb token varies).
inline models::SentenceInput sentence_input_for(const DatasetRow& row) {
  const FrameSpec& frame = frame_by_id(row.frame_id);
  RenderedSentence tpl = substituted_template(frame, row.polarity);
  auto tokens = tsv::split_tokens(row.sentence);
  if (tokens.size() != tpl.tokens.size())
    throw validation_error("sentence '" + row.sentence_id + "' has " +
                           std::to_string(tokens.size()) +
                           " tokens, frame skeleton expects " +
                           std::to_string(tpl.tokens.size()));
  models::SentenceInput in;
  in.tokens = std::move(tokens);
  in.head_of = tpl.head_of;
  in.target_index = row.target_index;
  return in;
}

/// Minimal CoNLL-U ingestion: FORM and HEAD columns only.
inline std::vector<models::SentenceInput> load_conllu(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open conllu file: " + path);
  std::vector<models::SentenceInput> out;
  models::SentenceInput cur;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!cur.tokens.empty()) {
      models::validate_tree(cur.head_of);
      out.push_back(std::move(cur));
      cur = {};
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    auto fields = tsv::split(line, '\t');
    if (fields.size() < 8)
      throw io_error(path + ":" + std::to_string(line_no) +
                     ": expected at least 8 CoNLL-U columns");
    if (fields[0].find('-') != std::string::npos) continue;  // range lines
    try {
      cur.tokens.push_back(fields[1]);
      const long head = std::stol(fields[6]);
      cur.head_of.push_back(static_cast<int>(head) - 1);
    } catch (const std::exception& e) {
      throw io_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  flush();
  return out;
}

// -- verb inventory ----------------------------------------------------------

/// (verb, frame_id) inventory TSV: two columns, header "verb\tframe_id".
inline std::vector<VerbFramePair> load_verb_inventory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open verb inventory: " + path);
  std::vector<VerbFramePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line == "verb\tframe_id") continue;
    auto fields = tsv::split(line, '\t');
    if (fields.size() != 2)
      throw io_error(path + ":" + std::to_string(line_no) +
                     ": expected 2 fields");
    pairs.push_back({fields[0], fields[1]});
  }
  return pairs;
}

}  // namespace fact::verdata
