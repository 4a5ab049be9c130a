#pragma once

#include <algorithm>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "fact/errors.hpp"

namespace fact::verdata {

enum class Polarity { Positive, Negative };

inline std::string polarity_name(Polarity p) {
  return p == Polarity::Positive ? "positive" : "negative";
}

inline Polarity polarity_from_name(const std::string& s) {
  if (s == "positive") return Polarity::Positive;
  if (s == "negative") return Polarity::Negative;
  throw validation_error("unknown polarity: " + s);
}

enum class Eventivity { Finite, ForTo, Eventive, Stative };

enum class VerbForm { Past, Participle, Lemma };

// -- morphology ----------------------------------------------------------

namespace morph {

struct Forms {
  std::string past, participle;
};

inline const std::unordered_map<std::string, Forms>& exceptions() {
  static const std::unordered_map<std::string, Forms> table = {
      {"know", {"knew", "known"}},       {"tell", {"told", "told"}},
      {"forget", {"forgot", "forgotten"}}, {"think", {"thought", "thought"}},
      {"say", {"said", "said"}},         {"see", {"saw", "seen"}},
      {"find", {"found", "found"}},      {"mean", {"meant", "meant"}},
      {"hear", {"heard", "heard"}},      {"feel", {"felt", "felt"}},
      {"hold", {"held", "held"}},        {"get", {"got", "gotten"}},
      {"make", {"made", "made"}},        {"let", {"let", "let"}},
      {"forbid", {"forbade", "forbidden"}}, {"foresee", {"foresaw", "foreseen"}},
      {"withhold", {"withheld", "withheld"}}, {"regret", {"regretted", "regretted"}},
      {"admit", {"admitted", "admitted"}}, {"permit", {"permitted", "permitted"}},
      {"plan", {"planned", "planned"}},  {"plot", {"plotted", "plotted"}},
      {"beg", {"begged", "begged"}},     {"grant", {"granted", "granted"}},
      {"compel", {"compelled", "compelled"}}, {"prefer", {"preferred", "preferred"}},
      {"omit", {"omitted", "omitted"}},
  };
  return table;
}

/// Lemmas with irregular past forms that the exception table does not
/// cover; rendering them is an error rather than a silently wrong "-ed".
inline const std::unordered_set<std::string>& known_irregular_uncovered() {
  static const std::unordered_set<std::string> set = {"be", "do", "go",
                                                      "have", "take", "give"};
  return set;
}

inline bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

inline std::string regular_past(const std::string& lemma) {
  if (lemma.empty())
    throw validation_error("morphology: empty verb lemma");
  if (lemma.back() == 'e') return lemma + "d";
  if (lemma.size() >= 2 && lemma.back() == 'y' &&
      !is_vowel(lemma[lemma.size() - 2]))
    return lemma.substr(0, lemma.size() - 1) + "ied";
  return lemma + "ed";
}

inline std::string inflect(const std::string& lemma, VerbForm form) {
  if (form == VerbForm::Lemma) return lemma;
  auto it = exceptions().find(lemma);
  if (it != exceptions().end())
    return form == VerbForm::Past ? it->second.past : it->second.participle;
  if (known_irregular_uncovered().count(lemma))
    throw validation_error("morphology: no inflection table entry for "
                           "irregular verb '" + lemma + "'");
  return regular_past(lemma);
}

}  // namespace morph

// -- frames ----------------------------------------------------------------

/// One polarity's template: tokens with a "{V}" slot, a fixed dependency
/// skeleton over the template positions, and the verb form the slot takes.
struct PolarityTemplate {
  std::vector<std::string> tokens;
  std::vector<int> head_of;
  std::size_t verb_index = 0;
  std::size_t target_index = 0;
  VerbForm form = VerbForm::Past;
};

/// One of the nine syntactic contexts: bleached templates for both matrix
/// polarities, the probed embedded predicate, and the probe question.
struct FrameSpec {
  std::string id;
  Eventivity eventivity = Eventivity::Finite;
  std::string question;
  std::string embedded_predicate;
  PolarityTemplate positive, negative;

  const PolarityTemplate& for_polarity(Polarity p) const {
    return p == Polarity::Positive ? positive : negative;
  }
};

namespace detail {

inline PolarityTemplate make_template(std::vector<std::string> tokens,
                                      std::vector<int> head_of,
                                      std::size_t verb_index,
                                      std::size_t target_index, VerbForm form) {
  PolarityTemplate t;
  t.tokens = std::move(tokens);
  t.head_of = std::move(head_of);
  t.verb_index = verb_index;
  t.target_index = target_index;
  t.form = form;
  return t;
}

}  // namespace detail

/// The nine Table-1 contexts, in canonical order. Skeletons keep "n't" a
/// direct dependent of the embedding verb and point target_index at the
/// embedded predicate (happened / happen / do / have).
inline const std::vector<FrameSpec>& enumerate_frames() {
  using detail::make_template;
  static const std::vector<FrameSpec> frames = [] {
    std::vector<FrameSpec> fs;

    const std::string q_thing = "did that thing happen?";
    const std::string q_do = "did that person do that thing?";
    const std::string q_have = "did that person have that thing?";

    {  // NP _ed that S
      FrameSpec f;
      f.id = "NP _ed that S";
      f.eventivity = Eventivity::Finite;
      f.question = q_thing;
      f.embedded_predicate = "happened";
      f.positive = make_template(
          {"Someone", "{V}", "that", "a", "particular", "thing", "happened", "."},
          {1, -1, 6, 5, 5, 6, 1, 1}, 1, 6, VerbForm::Past);
      f.negative = make_template(
          {"Someone", "did", "n't", "{V}", "that", "a", "particular", "thing",
           "happened", "."},
          {3, 3, 3, -1, 8, 7, 7, 8, 3, 3}, 3, 8, VerbForm::Lemma);
      fs.push_back(std::move(f));
    }
    {  // NP was _ed that S
      FrameSpec f;
      f.id = "NP was _ed that S";
      f.eventivity = Eventivity::Finite;
      f.question = q_thing;
      f.embedded_predicate = "happened";
      f.positive = make_template(
          {"Someone", "was", "{V}", "that", "a", "particular", "thing",
           "happened", "."},
          {2, 2, -1, 7, 6, 6, 7, 2, 2}, 2, 7, VerbForm::Participle);
      f.negative = make_template(
          {"Someone", "was", "n't", "{V}", "that", "a", "particular", "thing",
           "happened", "."},
          {3, 3, 3, -1, 8, 7, 7, 8, 3, 3}, 3, 8, VerbForm::Participle);
      fs.push_back(std::move(f));
    }
    {  // NP _ed for NP to VP
      FrameSpec f;
      f.id = "NP _ed for NP to VP";
      f.eventivity = Eventivity::ForTo;
      f.question = q_thing;
      f.embedded_predicate = "happen";
      f.positive = make_template(
          {"Someone", "{V}", "for", "a", "particular", "thing", "to", "happen",
           "."},
          {1, -1, 7, 5, 5, 7, 7, 1, 1}, 1, 7, VerbForm::Past);
      f.negative = make_template(
          {"Someone", "did", "n't", "{V}", "for", "a", "particular", "thing",
           "to", "happen", "."},
          {3, 3, 3, -1, 9, 7, 7, 9, 9, 3, 3}, 3, 9, VerbForm::Lemma);
      fs.push_back(std::move(f));
    }

    auto make_raising = [&](const std::string& id, Eventivity ev,
                            const std::string& q, const std::string& emb) {
      FrameSpec f;
      f.id = id;
      f.eventivity = ev;
      f.question = q;
      f.embedded_predicate = emb;
      f.positive = make_template(
          {"Someone", "{V}", "a", "particular", "person", "to", emb, "a",
           "particular", "thing", "."},
          {1, -1, 4, 4, 6, 6, 1, 9, 9, 6, 1}, 1, 6, VerbForm::Past);
      f.negative = make_template(
          {"Someone", "did", "n't", "{V}", "a", "particular", "person", "to",
           emb, "a", "particular", "thing", "."},
          {3, 3, 3, -1, 6, 6, 8, 8, 3, 11, 11, 8, 3}, 3, 8, VerbForm::Lemma);
      return f;
    };
    fs.push_back(make_raising("NP _ed NP to VP[+ev]", Eventivity::Eventive,
                              q_do, "do"));
    fs.push_back(make_raising("NP _ed NP to VP[-ev]", Eventivity::Stative,
                              q_have, "have"));

    auto make_passive_inf = [&](const std::string& id, Eventivity ev,
                                const std::string& q, const std::string& emb) {
      FrameSpec f;
      f.id = id;
      f.eventivity = ev;
      f.question = q;
      f.embedded_predicate = emb;
      f.positive = make_template(
          {"A", "particular", "person", "was", "{V}", "to", emb, "a",
           "particular", "thing", "."},
          {2, 2, 4, 4, -1, 6, 4, 9, 9, 6, 4}, 4, 6, VerbForm::Participle);
      f.negative = make_template(
          {"A", "particular", "person", "was", "n't", "{V}", "to", emb, "a",
           "particular", "thing", "."},
          {2, 2, 5, 5, 5, -1, 7, 5, 10, 10, 7, 5}, 5, 7, VerbForm::Participle);
      return f;
    };
    fs.push_back(make_passive_inf("NP was _ed to VP[+ev]", Eventivity::Eventive,
                                  q_do, "do"));
    fs.push_back(make_passive_inf("NP was _ed to VP[-ev]", Eventivity::Stative,
                                  q_have, "have"));

    auto make_control = [&](const std::string& id, Eventivity ev,
                            const std::string& q, const std::string& emb) {
      FrameSpec f;
      f.id = id;
      f.eventivity = ev;
      f.question = q;
      f.embedded_predicate = emb;
      f.positive = make_template(
          {"A", "particular", "person", "{V}", "to", emb, "a", "particular",
           "thing", "."},
          {2, 2, 3, -1, 5, 3, 8, 8, 5, 3}, 3, 5, VerbForm::Past);
      f.negative = make_template(
          {"A", "particular", "person", "did", "n't", "{V}", "to", emb, "a",
           "particular", "thing", "."},
          {2, 2, 5, 5, 5, -1, 7, 5, 10, 10, 7, 5}, 5, 7, VerbForm::Lemma);
      return f;
    };
    fs.push_back(make_control("NP _ed to VP[+ev]", Eventivity::Eventive, q_do,
                              "do"));
    fs.push_back(make_control("NP _ed to VP[-ev]", Eventivity::Stative, q_have,
                              "have"));

    return fs;
  }();
  return frames;
}

inline const FrameSpec& frame_by_id(const std::string& id) {
  for (const auto& f : enumerate_frames())
    if (f.id == id) return f;
  throw validation_error("unknown frame id: " + id);
}

// -- rendering ---------------------------------------------------------------

/// A bleached sentence instantiating one (verb, frame, polarity) cell.
struct RenderedSentence {
  std::string verb;
  std::string frame_id;
  Polarity polarity = Polarity::Positive;
  std::vector<std::string> tokens;
  std::vector<int> head_of;
  std::size_t verb_index = 0;
  std::size_t target_index = 0;
  std::string question;

  std::string text() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (i) out += ' ';
      out += tokens[i];
    }
    return out;
  }

  std::string id() const {
    return verb + "|" + frame_id + "|" + polarity_name(polarity);
  }
};

inline RenderedSentence render_sentence(const std::string& verb,
                                        const FrameSpec& frame,
                                        Polarity polarity) {
  const PolarityTemplate& tpl = frame.for_polarity(polarity);
  RenderedSentence s;
  s.verb = verb;
  s.frame_id = frame.id;
  s.polarity = polarity;
  s.tokens = tpl.tokens;
  s.head_of = tpl.head_of;
  s.verb_index = tpl.verb_index;
  s.target_index = tpl.target_index;
  s.question = frame.question;
  s.tokens[tpl.verb_index] = morph::inflect(verb, tpl.form);
  return s;
}

/// Replaces "a particular thing" with "something" and "a particular person"
/// with "someone" (capitalized sentence-initially), remapping the skeleton
/// and all indices. The indefinite inherits the phrase head's attachment.
inline RenderedSentence substitute_indefinites(const RenderedSentence& in) {
  const auto& toks = in.tokens;
  const std::size_t n = toks.size();

  // old index -> collapse group start, and which positions vanish
  std::vector<bool> drop(n, false);
  std::vector<std::string> replacement(n);
  for (std::size_t i = 0; i + 2 < n; ++i) {
    const bool art = toks[i] == "a" || toks[i] == "A";
    if (!art || toks[i + 1] != "particular") continue;
    if (toks[i + 2] != "thing" && toks[i + 2] != "person") continue;
    std::string word = toks[i + 2] == "thing" ? "something" : "someone";
    if (i == 0) word[0] = static_cast<char>(std::toupper(word[0]));
    replacement[i] = word;
    drop[i + 1] = drop[i + 2] = true;
  }

  // New index of each kept position; dropped phrase members map to the
  // surviving first token so incoming heads land on the indefinite.
  std::vector<std::size_t> remap(n, 0);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (drop[i]) {
      remap[i] = next - 1;
      continue;
    }
    remap[i] = next++;
  }

  RenderedSentence out = in;
  out.tokens.clear();
  out.head_of.clear();
  for (std::size_t i = 0; i < n; ++i) {
    if (drop[i]) continue;
    const bool collapsed = !replacement[i].empty();
    out.tokens.push_back(collapsed ? replacement[i] : toks[i]);
    // The indefinite inherits the phrase head's (= last member's) head.
    const std::size_t source = collapsed ? i + 2 : i;
    const int h = in.head_of[source];
    out.head_of.push_back(h == -1 ? -1 : static_cast<int>(remap[static_cast<std::size_t>(h)]));
  }
  out.verb_index = remap[in.verb_index];
  out.target_index = remap[in.target_index];
  return out;
}

}  // namespace fact::verdata
