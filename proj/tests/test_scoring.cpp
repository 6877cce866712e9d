#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "vprobe/scoring.hpp"

using namespace vprobe;

namespace {

RenderedPrompt two_option(const std::string& variant) {
  const auto q = testutil::question("Q2", "Yes or no?", {"Yes", "No"});
  return render(q, builtin_styles()[0], standard_variant(variant, 2));
}

RenderedPrompt four_option(const std::string& variant = "letters") {
  return render(testutil::importance_question(), builtin_styles()[0], standard_variant(variant, 4));
}

TokenLogprobResult observed(std::map<std::string, double> lps) {
  TokenLogprobResult r;
  for (const auto& [tok, lp] : lps) {
    r.logprobs[tok] = lp;
    r.evidence[tok] = TokenEvidence::Observed;
  }
  return r;
}

}  // namespace

TEST(SurfaceForms, WithAndWithoutSpace) {
  EXPECT_EQ(surface_forms("A"), (std::vector<std::string>{"A", " A"}));
  EXPECT_EQ(surface_forms("0"), (std::vector<std::string>{"0", " 0"}));
  EXPECT_THROW(surface_forms("AB"), ValidationError);
}

TEST(SurfaceForms, DisjointAcrossLabels) {
  const auto set = surface_form_set(four_option());
  std::set<std::string> all;
  std::size_t n = 0;
  for (const auto& [_, forms] : set) {
    for (const auto& f : forms) {
      all.insert(f);
      ++n;
    }
  }
  EXPECT_EQ(all.size(), n);
}

TEST(ScoreToken, HandRenormalization) {
  const auto rep = score_token(observed({{"A", std::log(0.2)}, {"B", std::log(0.4)}}), two_option("letters"));
  EXPECT_NEAR(rep.probs[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(rep.probs[1], 2.0 / 3.0, 1e-12);
  EXPECT_EQ(rep.method, Method::Token);
}

TEST(ScoreToken, ReversedVariantMapsToCanonical) {
  // A shows canonical 1, B shows canonical 0.
  const auto rep = score_token(observed({{"A", std::log(0.4)}, {"B", std::log(0.2)}}), two_option("letters_reversed"));
  EXPECT_NEAR(rep.probs[0], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(rep.probs[1], 2.0 / 3.0, 1e-12);
}

TEST(ScoreToken, EqualLogprobsGiveUniform) {
  const auto rep = score_token(observed({{"A", -3}, {"B", -3}, {"C", -3}, {"D", -3}}), four_option());
  for (double p : rep.probs) EXPECT_NEAR(p, 0.25, 1e-15);
}

TEST(ScoreToken, SumsSurfaceForms) {
  const auto rep = score_token(observed({{"A", std::log(0.1)}, {" A", std::log(0.3)}, {"B", std::log(0.4)}}),
                               two_option("letters"));
  EXPECT_NEAR(rep.probs[0], 0.5, 1e-12);
}

TEST(ScoreToken, FlooredFormsCountOnlyWithoutEvidence) {
  const auto result = floor_candidates({{"A", std::log(0.5)}, {"B", std::log(0.25)}}, candidate_tokens(two_option("letters")));
  EXPECT_EQ(result.floored_count(), 2u);
  const auto rep = score_token(result, two_option("letters"));
  EXPECT_NEAR(rep.probs[0], 2.0 / 3.0, 1e-12);
  EXPECT_EQ(rep.diagnostics.floored, 2u);
  EXPECT_FALSE(rep.diagnostics.degenerate);
}

TEST(ScoreToken, AllFlooredIsDegenerateNotFatal) {
  const auto result = floor_candidates({{"The", -0.1}}, candidate_tokens(two_option("letters")));
  const auto rep = score_token(result, two_option("letters"));
  EXPECT_TRUE(rep.diagnostics.degenerate);
  EXPECT_NEAR(rep.probs[0], 0.5, 1e-12);
}

TEST(ScoreToken, MissingLabelIsPreconditionError) {
  EXPECT_THROW(score_token(observed({{"A", -1}}), two_option("letters")), PreconditionError);
}

TEST(ScoreSequence, InversePerplexity) {
  std::vector<SequenceScore> s{{"a", -std::log(2.0), 1}, {"b", -std::log(4.0), 1}, {"c", -2 * std::log(4.0), 2}};
  const auto rep = score_sequence(s);
  EXPECT_NEAR(rep.probs[0], 0.5, 1e-12);
  EXPECT_NEAR(rep.probs[1], 0.25, 1e-12);
  EXPECT_NEAR(rep.probs[2], 0.25, 1e-12);
}

TEST(ScoreSequence, MatchesTokenForSingleTokens) {
  std::vector<SequenceScore> s{{"A", std::log(0.2), 1}, {"B", std::log(0.4), 1}};
  const auto seq = score_sequence(s, nullptr);
  const auto tok = score_token(observed({{"A", std::log(0.2)}, {"B", std::log(0.4)}}), two_option("letters"));
  EXPECT_NEAR(seq.probs[0], tok.probs[0], 1e-15);
  EXPECT_NEAR(seq.probs[1], tok.probs[1], 1e-15);
}

TEST(ScoreSequence, EqualPerplexityUniformAndExtremeValuesStable) {
  std::vector<SequenceScore> same{{"a", -5, 2}, {"b", -5, 2}};
  EXPECT_NEAR(score_sequence(same).probs[0], 0.5, 1e-15);
  std::vector<SequenceScore> extreme{{"a", -2000, 1}, {"b", -2001, 1}};
  const auto rep = score_sequence(extreme);
  EXPECT_NEAR(rep.probs[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
}

TEST(ScoreSequence, CountMismatch) {
  std::vector<SequenceScore> s{{"a", -1, 1}};
  const auto r = two_option("letters");
  EXPECT_THROW(score_sequence(s, &r), PreconditionError);
}

TEST(ExtractLabel, Tiers) {
  const auto r = four_option();
  EXPECT_EQ(extract_label("My answer is (A).", r), 0u);
  EXPECT_EQ(extract_label("B. Not very important", r), 1u);
  EXPECT_EQ(extract_label("C", r), 2u);
  EXPECT_EQ(extract_label("  D) clearly", r), 3u);
  EXPECT_EQ(extract_label("I would pick B because it fits.", r), 1u);
  EXPECT_FALSE(extract_label("I cannot answer that.", r).has_value());
  EXPECT_FALSE(extract_label("Either (A) or (B).", r).has_value());
  EXPECT_FALSE(extract_label("", r).has_value());
  // line-initial beats parenthesized
  EXPECT_EQ(extract_label("C. Not very important\nnot (A)", r), 2u);
  // "A" inside a word does not count
  EXPECT_FALSE(extract_label("Absolutely not sure", r).has_value());
}

TEST(ExtractLabel, ReversedVariantMapsThroughLabelMap) {
  const auto r = four_option("letters_reversed");
  EXPECT_EQ(extract_label("My answer is (A).", r), 3u);
}

TEST(ScoreText, FractionalCounts) {
  std::vector<std::string> samples(7, "A");
  samples.push_back("B");
  samples.push_back("(B)");
  samples.push_back("I cannot answer that.");
  const auto rep = score_text(samples, four_option());
  const Distribution expected{0.725, 0.225, 0.025, 0.025};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(rep.probs[i], expected[i], 1e-15);
  EXPECT_EQ(rep.diagnostics.invalid, 1u);
  EXPECT_EQ(rep.diagnostics.samples, 10u);
  EXPECT_EQ(majority_answer(rep), 0u);
}

TEST(ScoreText, AllInvalidIsUniform) {
  std::vector<std::string> samples(10, "no idea");
  const auto rep = score_text(samples, four_option());
  for (double p : rep.probs) EXPECT_DOUBLE_EQ(p, 0.25);
  EXPECT_EQ(rep.diagnostics.invalid, 10u);
}

TEST(ScoreText, PointMass) {
  std::vector<std::string> samples(10, "C");
  EXPECT_EQ(score_text(samples, four_option()).probs, (Distribution{0, 0, 1, 0}));
}

TEST(MajorityAnswer, ArgmaxWithLowestIndexTies) {
  EXPECT_EQ(majority_answer(std::vector<double>{0.1, 0.9}), 1u);
  EXPECT_EQ(majority_answer(std::vector<double>{0.5, 0.5}), 0u);
  EXPECT_EQ(majority_answer(std::vector<double>{0.2, 0.4, 0.4}), 1u);
}

TEST(MajorityAnswer, InvariantUnderMonotoneTransform) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(5), q(5);
    for (auto& x : p) x = u(rng);
    for (std::size_t i = 0; i < 5; ++i) q[i] = std::exp(3.0 * p[i]) + 1.0;
    EXPECT_EQ(majority_answer(p), majority_answer(q));
  }
}

TEST(ScoringProperties, RandomInputsGiveValidDistributions) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> lp(-20.0, 0.0);
  std::uniform_int_distribution<int> pick(0, 4);
  const auto r = four_option();
  const std::vector<std::string> outputs{"A", "(B)", "C. Not very important", "nothing", "D"};
  for (int t = 0; t < 100; ++t) {
    std::vector<std::pair<std::string, double>> top;
    for (const auto& c : candidate_tokens(r)) {
      if (pick(rng) > 0) top.emplace_back(c, lp(rng));
    }
    top.emplace_back("The", lp(rng));
    EXPECT_TRUE(is_distribution(score_token(floor_candidates(top, candidate_tokens(r)), r).probs));
    std::vector<SequenceScore> seq;
    for (int i = 0; i < 4; ++i) seq.push_back({"x", lp(rng), static_cast<std::size_t>(pick(rng) + 1)});
    EXPECT_TRUE(is_distribution(score_sequence(seq).probs));
    std::vector<std::string> samples;
    for (int i = 0; i < 7; ++i) samples.push_back(outputs[pick(rng)]);
    EXPECT_TRUE(is_distribution(score_text(samples, r).probs));
  }
}

TEST(RepresentationJson, RoundTrip) {
  auto rep = score_text(std::vector<std::string>{"A", "B", "?"}, four_option());
  rep.provenance.model = "m";
  rep.provenance.persona = "USA";
  const auto back = rep_from_json(to_json(rep), "test");
  EXPECT_EQ(back.probs, rep.probs);
  EXPECT_EQ(back.provenance.persona, rep.provenance.persona);
  EXPECT_EQ(back.diagnostics.invalid, 1u);
  EXPECT_EQ(to_json(back), to_json(rep));
}
