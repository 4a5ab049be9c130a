#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "fact/verdata/dataset.hpp"
#include "fact/verdata/frames.hpp"
#include "fact/verdata/normalize.hpp"
#include "fact/probe/stats.hpp"

using namespace fact;
using namespace fact::verdata;

TEST_CASE("frame inventory") {
  const auto& frames = enumerate_frames();
  CHECK(frames.size() == 9);
  CHECK(frame_by_id("NP _ed that S").question == "did that thing happen?");
  CHECK(frame_by_id("NP _ed NP to VP[-ev]").question ==
        "did that person have that thing?");
  CHECK(frame_by_id("NP _ed to VP[+ev]").question ==
        "did that person do that thing?");
  CHECK_THROWS_AS(frame_by_id("NP _ed whether S"), validation_error);
  for (const auto& f : frames) {
    models::validate_tree(f.positive.head_of);
    models::validate_tree(f.negative.head_of);
  }
}

TEST_CASE("render_sentence surface forms") {
  auto text = [](const RenderedSentence& s) { return s.text(); };
  CHECK(text(render_sentence("know", frame_by_id("NP _ed that S"),
                             Polarity::Positive)) ==
        "Someone knew that a particular thing happened .");
  // clitic-split tokenization: was n't / did n't
  CHECK(text(render_sentence("tell", frame_by_id("NP was _ed that S"),
                             Polarity::Negative)) ==
        "Someone was n't told that a particular thing happened .");
  CHECK(text(render_sentence("manage", frame_by_id("NP _ed to VP[+ev]"),
                             Polarity::Positive)) ==
        "A particular person managed to do a particular thing .");
  CHECK(text(render_sentence("know", frame_by_id("NP _ed that S"),
                             Polarity::Negative)) ==
        "Someone did n't know that a particular thing happened .");
  CHECK(text(render_sentence("need", frame_by_id("NP _ed for NP to VP"),
                             Polarity::Positive)) ==
        "Someone needed for a particular thing to happen .");
}

TEST_CASE("morphology") {
  CHECK(morph::inflect("fake", VerbForm::Past) == "faked");
  CHECK(morph::inflect("deny", VerbForm::Past) == "denied");
  CHECK(morph::inflect("want", VerbForm::Past) == "wanted");
  CHECK(morph::inflect("know", VerbForm::Past) == "knew");
  CHECK(morph::inflect("know", VerbForm::Participle) == "known");
  CHECK(morph::inflect("forget", VerbForm::Participle) == "forgotten");
  CHECK(morph::inflect("know", VerbForm::Lemma) == "know");
  CHECK_THROWS_WITH_AS(morph::inflect("go", VerbForm::Past),
                       doctest::Contains("go"), validation_error);
}

TEST_CASE("rendered sentences parse under their own skeleton") {
  for (const auto& f : enumerate_frames()) {
    for (Polarity pol : {Polarity::Positive, Polarity::Negative}) {
      RenderedSentence s = render_sentence("want", f, pol);
      models::validate_tree(s.head_of);
      CHECK(s.tokens[s.target_index] == f.embedded_predicate);
      if (pol == Polarity::Negative) {
        // negation is a direct dependent of the embedding verb
        bool found = false;
        for (std::size_t i = 0; i < s.tokens.size(); ++i)
          if (s.tokens[i] == "n't" &&
              s.head_of[i] == static_cast<int>(s.verb_index))
            found = true;
        CHECK(found);
      }
      RenderedSentence sub = substitute_indefinites(s);
      models::validate_tree(sub.head_of);
      CHECK(sub.tokens[sub.target_index] == f.embedded_predicate);
      CHECK(sub.tokens[sub.verb_index] == s.tokens[s.verb_index]);
    }
  }
}

TEST_CASE("polarity toggling changes exactly the negation region") {
  for (const auto& f : enumerate_frames()) {
    RenderedSentence pos = render_sentence("want", f, Polarity::Positive);
    RenderedSentence neg = render_sentence("want", f, Polarity::Negative);
    // strip the negation region and restore the positive verb form
    std::vector<std::string> stripped;
    for (std::size_t i = 0; i < neg.tokens.size(); ++i) {
      if (neg.tokens[i] == "n't") continue;
      if (neg.tokens[i] == "did") continue;
      if (i == neg.verb_index)
        stripped.push_back(pos.tokens[pos.verb_index]);
      else
        stripped.push_back(neg.tokens[i]);
    }
    CHECK(stripped == pos.tokens);
  }
}

TEST_CASE("substitute_indefinites") {
  RenderedSentence s = render_sentence("fake", frame_by_id("NP _ed that S"),
                                       Polarity::Positive);
  RenderedSentence sub = substitute_indefinites(s);
  CHECK(sub.text() == "Someone faked that something happened .");
  CHECK(sub.tokens[sub.target_index] == "happened");
  CHECK(sub.tokens[sub.verb_index] == "faked");

  // sentence-initial "A particular person" capitalizes
  RenderedSentence c = substitute_indefinites(render_sentence(
      "manage", frame_by_id("NP _ed to VP[+ev]"), Polarity::Positive));
  CHECK(c.text() == "Someone managed to do something .");
  models::validate_tree(c.head_of);

  // idempotent on sentences without the phrases
  RenderedSentence again = substitute_indefinites(sub);
  CHECK(again.tokens == sub.tokens);
  CHECK(again.head_of == sub.head_of);
}

TEST_CASE("generate_dataset") {
  SUBCASE("two sentences per pair") {
    auto out = generate_dataset({{"know", "NP _ed that S"}});
    CHECK(out.size() == 2);
    CHECK(out[0].polarity == Polarity::Positive);
    CHECK(out[1].polarity == Polarity::Negative);
  }
  SUBCASE("size is always twice the pair count") {
    std::vector<VerbFramePair> pairs;
    for (int i = 0; i < 7; ++i)
      pairs.push_back({"verb" + std::to_string(i), "NP _ed to VP[-ev]"});
    CHECK(generate_dataset(pairs).size() == 14);
  }
  SUBCASE("duplicate pairs rejected") {
    CHECK_THROWS_WITH_AS(
        generate_dataset({{"know", "NP _ed that S"}, {"know", "NP _ed that S"}}),
        doctest::Contains("duplicate"), validation_error);
  }
}

TEST_CASE("rule gold labels") {
  CHECK(rule_gold(VerbClass::Factive, Polarity::Positive) == 2.5);
  CHECK(rule_gold(VerbClass::Factive, Polarity::Negative) == 2.5);
  CHECK(rule_gold(VerbClass::Implicative, Polarity::Positive) == 2.5);
  CHECK(rule_gold(VerbClass::Implicative, Polarity::Negative) == -2.5);
  CHECK(rule_gold(VerbClass::Neutral, Polarity::Negative) == 0.0);
  CHECK(verb_class("know") == VerbClass::Factive);
  CHECK(verb_class("manage") == VerbClass::Implicative);
  CHECK(verb_class("want") == VerbClass::Neutral);
}

TEST_CASE("dataset TSV round trip and error reporting") {
  const std::string path = "/tmp/fact_dataset_test.tsv";
  auto sentences = generate_dataset(
      {{"know", "NP _ed that S"}, {"manage", "NP _ed to VP[+ev]"}});
  std::vector<DatasetRow> rows;
  for (const auto& s : sentences)
    rows.push_back(dataset_row_from(s, rule_gold(verb_class(s.verb), s.polarity)));
  write_dataset_tsv(path, rows);

  auto loaded = load_megaveridicality(path);
  REQUIRE(loaded.size() == rows.size());
  CHECK(loaded[0].sentence_id == rows[0].sentence_id);
  CHECK(loaded[0].gold_factuality == rows[0].gold_factuality);
  CHECK(loaded[0].sentence == rows[0].sentence);

  // reconstructed sentence input parses and points at the right tokens
  auto in = sentence_input_for(loaded[0]);
  CHECK(in.tokens.size() == in.head_of.size());
  CHECK(in.tokens[loaded[0].verb_index] == "knew");
  CHECK(in.tokens[in.target_index] == "happened");

  SUBCASE("empty file is an empty dataset") {
    const std::string empty = "/tmp/fact_dataset_empty.tsv";
    std::ofstream(empty).close();
    CHECK(load_megaveridicality(empty).empty());
    std::remove(empty.c_str());
  }
  SUBCASE("malformed row names the line") {
    const std::string bad = "/tmp/fact_dataset_bad.tsv";
    std::ofstream out(bad);
    out << kDatasetHeader << "\n" << "only\tthree\tfields\n";
    out.close();
    CHECK_THROWS_WITH_AS(load_megaveridicality(bad), doctest::Contains(":2:"),
                         io_error);
    std::remove(bad.c_str());
  }
  std::remove(path.c_str());
}

TEST_CASE("load_conllu") {
  const std::string path = "/tmp/fact_conllu_test.conllu";
  {
    std::ofstream out(path);
    out << "# sent_id = 1\n"
        << "1\tSomeone\t_\t_\t_\t_\t2\tnsubj\t_\t_\n"
        << "2\tknew\t_\t_\t_\t_\t0\troot\t_\t_\n"
        << "\n"
        << "1\tYes\t_\t_\t_\t_\t0\troot\t_\t_\n";
  }
  auto sentences = load_conllu(path);
  REQUIRE(sentences.size() == 2);
  CHECK(sentences[0].tokens == std::vector<std::string>{"Someone", "knew"});
  CHECK(sentences[0].head_of == std::vector<int>{1, -1});
  CHECK(sentences[1].tokens.size() == 1);
  std::remove(path.c_str());
}

namespace {

std::vector<AnnotationRecord> uniform_records(
    const std::string& sid, Response r, int annotators = 10) {
  std::vector<AnnotationRecord> out;
  for (int a = 0; a < annotators; ++a)
    out.push_back({sid, "a" + std::to_string(a), r});
  return out;
}

}  // namespace

TEST_CASE("normalize_responses: monotonicity and exchangeability") {
  std::vector<AnnotationRecord> records;
  for (int s = 0; s < 5; ++s) {
    auto r = uniform_records("s" + std::to_string(s), Response::Yes);
    records.insert(records.end(), r.begin(), r.end());
  }
  auto no_recs = uniform_records("s_no", Response::No);
  records.insert(records.end(), no_recs.begin(), no_recs.end());

  auto items = normalize_responses(records);
  REQUIRE(items.size() == 6);
  double min_score = 1e9;
  std::string min_id;
  for (const auto& it : items)
    if (it.factuality < min_score) {
      min_score = it.factuality;
      min_id = it.sentence_id;
    }
  CHECK(min_id == "s_no");

  // identical response multisets from identical annotators -> equal scores
  CHECK(items[0].factuality == doctest::Approx(items[1].factuality).epsilon(1e-12));
}

TEST_CASE("normalize_responses: degenerate single-level data") {
  auto records = uniform_records("s0", Response::Yes);
  auto more = uniform_records("s1", Response::Yes);
  records.insert(records.end(), more.begin(), more.end());
  CHECK_THROWS_WITH_AS(normalize_responses(records),
                       doctest::Contains("raw_mean_fallback"), numeric_error);
  NormalizeOptions opts;
  opts.raw_mean_fallback = true;
  auto items = normalize_responses(records, opts);
  CHECK(items.size() == 2);
  CHECK(items[0].factuality == 0.0);
}

TEST_CASE("normalize_responses: annotator relabeling invariance") {
  std::mt19937_64 rng(5);
  std::vector<AnnotationRecord> records, relabeled;
  std::uniform_int_distribution<int> level(0, 2);
  for (int s = 0; s < 12; ++s)
    for (int a = 0; a < 10; ++a) {
      Response r = static_cast<Response>(level(rng));
      records.push_back({"s" + std::to_string(s), "a" + std::to_string(a), r});
      relabeled.push_back(
          {"s" + std::to_string(s), "b" + std::to_string(9 - a), r});
    }
  NormalizeOptions opts;
  opts.iterations = 1500;
  auto base = normalize_responses(records, opts);
  auto perm = normalize_responses(relabeled, opts);
  for (std::size_t i = 0; i < base.size(); ++i)
    CHECK(base[i].factuality == doctest::Approx(perm[i].factuality).epsilon(1e-9));
}

TEST_CASE("normalize_responses: reversal equivariance") {
  std::mt19937_64 rng(6);
  std::vector<AnnotationRecord> records, reversed;
  std::uniform_int_distribution<int> level(0, 2);
  for (int s = 0; s < 12; ++s)
    for (int a = 0; a < 10; ++a) {
      int r = level(rng);
      records.push_back({"s" + std::to_string(s), "a" + std::to_string(a),
                         static_cast<Response>(r)});
      reversed.push_back({"s" + std::to_string(s), "a" + std::to_string(a),
                          static_cast<Response>(2 - r)});
    }
  auto base = normalize_responses(records);
  auto rev = normalize_responses(reversed);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < base.size(); ++i) {
    x.push_back(base[i].factuality);
    y.push_back(-rev[i].factuality);
  }
  CHECK(probe::pearson(x, y) > 0.999);
}

TEST_CASE("normalize_responses recovers planted latent means") {
  // generative simulation from the assumed ordinal model
  std::mt19937_64 rng(11);
  // wide latent spread relative to the cutpoints; with 10 three-level
  // responses per sentence a narrow spread caps recovery below 0.95
  std::normal_distribution<double> latent(0.0, 3.0), annot(0.0, 0.3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double c0 = -3.0, c1 = 3.0;
  const int S = 200, A = 10;
  std::vector<double> theta(S), uvec(A);
  for (auto& t : theta) t = latent(rng);
  for (auto& a : uvec) a = annot(rng);
  std::vector<AnnotationRecord> records;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const double eta = theta[s] + uvec[a];
      const double p0 = 1.0 / (1.0 + std::exp(-(c0 - eta)));
      const double p01 = 1.0 / (1.0 + std::exp(-(c1 - eta)));
      const double r = u(rng);
      Response resp = r < p0 ? Response::No
                             : (r < p01 ? Response::MaybeOrMaybeNot
                                        : Response::Yes);
      records.push_back({"s" + std::to_string(s), "a" + std::to_string(a), resp});
    }
  auto items = normalize_responses(records);
  std::vector<double> truth, est;
  for (int s = 0; s < S; ++s) {
    truth.push_back(theta[s]);
    est.push_back(items[static_cast<std::size_t>(s)].factuality);
  }
  CHECK(probe::pearson(est, truth) > 0.95);
}

TEST_CASE("annotation TSV round trip") {
  const std::string path = "/tmp/fact_ann_test.tsv";
  std::vector<AnnotationRecord> records = {
      {"s0", "a0", Response::Yes},
      {"s0", "a1", Response::No},
      {"s1", "a0", Response::MaybeOrMaybeNot},
  };
  write_annotations_tsv(path, records);
  auto loaded = load_annotations_tsv(path);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[1].response == Response::No);
  CHECK(loaded[2].sentence_id == "s1");
  std::remove(path.c_str());
}
