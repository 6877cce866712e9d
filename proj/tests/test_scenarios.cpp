#include <gtest/gtest.h>

#include "helpers.hpp"
#include "vprobe/scenarios.hpp"

using namespace vprobe;

namespace {

ValueQuestion family() {
  auto q = testutil::question("Q010", "How important is family in your life?",
                              {"Very important", "Rather important", "Not very important", "Not at all important"},
                              "family");
  return q;
}

std::string ten_blocks(const std::string& skip = "") {
  std::string out;
  for (int i = 1; i <= 10; ++i) {
    const auto n = std::to_string(i);
    for (const std::string tag : {"Situation_", "ActionA_", "ActionB_"}) {
      if (tag + n == skip) continue;
      out += tag + n + ": text for " + tag + n + ".\n";
    }
  }
  return out;
}

MockContext context_with(std::vector<ScenarioRecord> scenarios = {}) {
  MockContext ctx;
  ctx.bank.questions.push_back(family());
  ctx.scenarios = std::move(scenarios);
  return ctx;
}

ScenarioRecord verified(const std::string& situation) {
  return {"Q010", situation, "PersonX visits home.", "PersonX stays at the office.", Pole::Low, Pole::High, true};
}

}  // namespace

TEST(GenerationPrompt, CarriesInstructionsExampleAndPoles) {
  const auto p = scene_generation_prompt(family());
  EXPECT_TRUE(p.starts_with("Your job is to think creatively and come up with a story of everyday situations"));
  EXPECT_NE(p.find("You need to come up with 10 situations and 20 actions for a given value orientation question."),
            std::string::npos);
  EXPECT_NE(p.find("Situation_i:\nActionA_i:\nActionB_i:"), std::string::npos);
  EXPECT_NE(p.find("Indicate how important family is in your life. Person A: Very important Person B: Not at all important"),
            std::string::npos);
  EXPECT_TRUE(p.ends_with(
      "How important is family in your life? Person A: Very important Person B: Not at all important\n"));
}

TEST(GenerationPrompt, UsesPoleAnnotations) {
  auto q = family();
  q.pole_low = "Family first";
  q.pole_high = "Career first";
  EXPECT_NE(scene_generation_prompt(q).find("Person A: Family first Person B: Career first"), std::string::npos);
}

TEST(VerificationPrompt, ListsFourQuestions) {
  const auto p = verification_prompt(family(), verified("PersonX is invited to dinner."));
  EXPECT_TRUE(p.starts_with("Your job is to verify the correctness of samples generated by the Language Models."));
  EXPECT_NE(p.find("Q1. Is the situation realistic and will lead to different actions?"), std::string::npos);
  EXPECT_NE(p.find("Q4. Are the actions of Person B reasonable and imply their answer to the value orientation question?"),
            std::string::npos);
  EXPECT_NE(p.find("Situation: PersonX is invited to dinner.\nActionA: PersonX visits home.\n"), std::string::npos);
}

TEST(ParseGenerated, TenCompleteBlocks) {
  const auto parsed = parse_generated_scenarios(ten_blocks(), family());
  ASSERT_EQ(parsed.records.size(), 10u);
  EXPECT_TRUE(parsed.notes.empty());
  EXPECT_EQ(parsed.records[0].situation, "text for Situation_1.");
  EXPECT_EQ(parsed.records[9].action_b, "text for ActionB_10.");
  for (const auto& r : parsed.records) {
    EXPECT_EQ(r.pole_a, Pole::Low);
    EXPECT_EQ(r.pole_b, Pole::High);
    EXPECT_FALSE(r.verified);
  }
}

TEST(ParseGenerated, IncompleteBlockIsDroppedWithNote) {
  const auto parsed = parse_generated_scenarios(ten_blocks("ActionB_7"), family());
  EXPECT_EQ(parsed.records.size(), 9u);
  ASSERT_EQ(parsed.notes.size(), 1u);
  EXPECT_NE(parsed.notes[0].find("ActionB_7"), std::string::npos);
}

TEST(ParseGenerated, ValueOnNextLineAndMarkdown) {
  const std::string text = "**Situation_1:**\nPersonX gets a call.\nActionA_1: Goes home.\n**ActionB_1**: Stays.\n";
  const auto parsed = parse_generated_scenarios(text, family());
  ASSERT_EQ(parsed.records.size(), 1u);
  EXPECT_EQ(parsed.records[0].situation, "PersonX gets a call.");
  EXPECT_EQ(parsed.records[0].action_b, "Stays.");
}

TEST(ParseGenerated, NoBlocks) {
  const auto parsed = parse_generated_scenarios("I cannot help with that.", family());
  EXPECT_TRUE(parsed.records.empty());
  EXPECT_EQ(parsed.notes.size(), 1u);
}

TEST(CriticResponse, Forms) {
  EXPECT_TRUE(parse_critic_response(R"({"Q1": "Yes", "Q2": "Yes", "Q3": "Yes", "Q4": "Yes"})").all_yes());
  EXPECT_TRUE(parse_critic_response("{Q1: Yes,\nQ2: yes,\nQ3: YES,\nQ4: Yes,}").all_yes());
  const auto no = parse_critic_response(R"({"Q1": "Yes", "Q2": "Yes", "Q3": "No", "Q4": "Yes"})");
  EXPECT_TRUE(no.parsed);
  EXPECT_FALSE(no.all_yes());
  EXPECT_EQ(no.answers[2], false);
  EXPECT_FALSE(parse_critic_response("These look fine to me.").parsed);
  EXPECT_FALSE(parse_critic_response(R"({"Q1": "Yes", "Q2": "Yes"})").parsed);
}

TEST(ExtractRating, Examples) {
  EXPECT_EQ(extract_rating("8 out of 10"), 8.0);
  EXPECT_EQ(extract_rating("I would rate this action 7.5 out of 10."), 7.5);
  EXPECT_EQ(extract_rating("Rating: 10"), 10.0);
  EXPECT_EQ(extract_rating("0"), 0.0);
  EXPECT_FALSE(extract_rating("I strongly agree").has_value());
  EXPECT_FALSE(extract_rating("").has_value());
  // numbers outside the scale are skipped
  EXPECT_EQ(extract_rating("Out of 100 people, 6 would agree"), 6.0);
}

TEST(RatingPrompt, Shape) {
  const auto p = rating_prompt("PersonX is tired.", "PersonX rests.");
  EXPECT_EQ(p,
            "Situation: PersonX is tired.\nAction: PersonX rests.\nOn a scale of 0 to 10, how much do you agree with "
            "or favor this action? Respond with a single number.\nAnswer:");
}

TEST(Pipeline, GenerateFilterAndRateWithMocks) {
  QuestionBank bank;
  bank.questions.push_back(family());
  MockBackend gen(mock_spec_from_json({{"model", "gen"}, {"generator", {{"omit", {"ActionB_7"}}}}}, "t"), context_with());
  auto generated = generate_scenarios(bank, gen);
  EXPECT_EQ(generated.records.size(), 9u);
  ASSERT_EQ(generated.notes.size(), 1u);
  EXPECT_NE(generated.notes[0].find("ActionB_7"), std::string::npos);

  MockBackend critic(mock_spec_from_json({{"model", "critic"},
                                          {"critic", {{"reject_when_contains", "at work"}, {"reject_question", 3}}}},
                                         "t"),
                     context_with());
  const auto filtered = filter_scenarios(generated.records, bank, critic);
  // even-numbered cases are set at work and case 7 is gone
  EXPECT_EQ(filtered.kept.size(), 4u);
  EXPECT_EQ(filtered.dropped, 5u);
  EXPECT_EQ(filtered.unverifiable, 0u);
  for (const auto& r : filtered.kept) {
    EXPECT_TRUE(r.verified);
    EXPECT_EQ(r.situation.find("at work"), std::string::npos);
  }

  MockBackend prose(mock_spec_from_json({{"model", "p"}, {"critic", {{"prose", true}}}}, "t"), context_with());
  const auto unparsed = filter_scenarios(generated.records, bank, prose);
  EXPECT_EQ(unparsed.kept.size(), 0u);
  EXPECT_EQ(unparsed.unverifiable, 9u);
}

TEST(RateAction, ConstantMockAndPrecondition) {
  const auto s = verified("PersonX is invited to dinner.");
  MockBackend rater(mock_spec_from_json({{"model", "r"}, {"rating", {{"mode", "constant"}, {"value", 8}}}}, "t"),
                    context_with({s}));
  const auto ratings = rate_action(s, "Q010#0", Slot::B, rater);
  ASSERT_EQ(ratings.size(), 1u);
  EXPECT_TRUE(ratings[0].valid);
  EXPECT_EQ(ratings[0].score, 8.0);
  EXPECT_EQ(ratings[0].slot, Slot::B);
  EXPECT_EQ(ratings[0].raw, "I would rate this action 8 out of 10.");
  auto unverified = s;
  unverified.verified = false;
  EXPECT_THROW(rate_action(unverified, "Q010#0", Slot::A, rater), PreconditionError);
}

TEST(RateAction, LinearMockFollowsPoleWeight) {
  const auto s = verified("PersonX is invited to dinner.");
  MockBackend rater(mock_spec_from_json({{"model", "r"},
                                         {"distributions", {{"Q010", {0.1, 0.2, 0.3, 0.4}}}},
                                         {"rating", {{"mode", "linear"}}}},
                                        "t"),
                    context_with({s}));
  EXPECT_NEAR(rate_action(s, "Q010#0", Slot::A, rater)[0].score, 3.0, 1e-12);
  EXPECT_NEAR(rate_action(s, "Q010#0", Slot::B, rater)[0].score, 7.0, 1e-12);
}

TEST(RatingJson, RoundTripAndInvalid) {
  ActionRating r{"m", "Q010#0", Slot::A, 6.5, "6.5", true};
  const auto back = rating_from_json(to_json(r), "t");
  EXPECT_EQ(back.score, 6.5);
  EXPECT_EQ(back.slot, Slot::A);
  ActionRating bad{"m", "Q010#0", Slot::B, 0, "dunno", false};
  EXPECT_FALSE(rating_from_json(to_json(bad), "t").valid);
  EXPECT_THROW(rating_from_json({{"model", "m"}, {"scenario_id", "x"}, {"slot", "C"}, {"valid", false}}, "t"), SchemaError);
}
