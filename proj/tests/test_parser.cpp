#include <gtest/gtest.h>

#include "random_generation.hpp"
#include "taskforge/parser.hpp"
#include "test_util.hpp"

namespace taskforge {
namespace {

TEST(ParseGeneration, CaseStudyScript) {
  const auto text = testing::read_file(testing::fixture("case_study_generation.txt"));
  const auto g = parse_generation(text);
  EXPECT_EQ(g.plan,
            "1. Introduce the topic of the paragraph\n"
            "2. Mention the possible I.D. from Gina's snapshots\n"
            "3. Talk about the new technology called autostereoscopic 3D\n"
            "4. Mention the difficulty of wearing 3D glasses\n"
            "5. Mention the regret of not asking Jean for details\n"
            "6. Talk about the police and their movement down the main street of Atenco");
  EXPECT_TRUE(g.paragraph.starts_with("We have a few topics to cover in this paragraph."));
  EXPECT_TRUE(g.paragraph.ends_with("and we are tracking their movements."));
  EXPECT_EQ(g.task_raw, "Text Classification");
  EXPECT_EQ(g.labels, (std::vector<std::string>{"I.D. Mentioned", "Technology Mentioned", "Regret Expressed",
                                                "Police Mentioned"}));
}

TEST(ParseGeneration, MinimalBracketed) {
  const auto g = parse_generation("Plan:\np\nParagraph:\ng\nTask:\n[T]\nLabels:\n[L]");
  EXPECT_EQ(g, (GenerationResult{"p", "g", "T", {"L"}}));
}

TEST(ParseGeneration, MissingTask) {
  try {
    parse_generation("Plan:\np\nParagraph:\ng\nLabels:\nL");
    FAIL();
  } catch (const MissingSection& e) {
    EXPECT_EQ(e.section(), "Task");
  }
}

TEST(ParseGeneration, DuplicateSection) {
  try {
    parse_generation("Plan:\np\nParagraph:\ng\nTask:\nT\nLabels:\nL\nplan:\nagain");
    FAIL();
  } catch (const DuplicateSection& e) {
    EXPECT_EQ(e.section(), "Plan");
  }
}

TEST(ParseGeneration, TolerantHeaders) {
  const auto g = parse_generation(
      "Sure! Here is my answer.\n\nPLAN:   \nstep one\n  paragraph: The text\ncontinues.\nTask: Sentiment Analysis\n"
      "labels:\t\n- Positive\n* Negative\n3) Neutral\n\xE2\x80\xA2 Mixed\n");
  EXPECT_EQ(g.plan, "step one");
  EXPECT_EQ(g.paragraph, "The text\ncontinues.");
  EXPECT_EQ(g.task_raw, "Sentiment Analysis");
  EXPECT_EQ(g.labels, (std::vector<std::string>{"Positive", "Negative", "Neutral", "Mixed"}));
}

TEST(ParseGeneration, SectionsInAnyOrder) {
  const auto g = parse_generation("Labels:\nA\nB\nTask:\n[X]\nParagraph:\nP\nPlan:\nQ\n");
  EXPECT_EQ(g, (GenerationResult{"Q", "P", "X", {"A", "B"}}));
}

TEST(ParseGeneration, BlankLabelsAllowedBlankOthersNot) {
  EXPECT_TRUE(parse_generation("Plan:\np\nParagraph:\ng\nTask:\nT\nLabels:\n").labels.empty());
  EXPECT_TRUE(parse_generation("Plan:\np\nParagraph:\ng\nTask:\nT\nLabels:\n[]").labels.empty());
  EXPECT_THROW(parse_generation("Plan:\n\nParagraph:\ng\nTask:\nT\nLabels:\nL"), EmptySection);
  EXPECT_THROW(parse_generation("Plan:\np\nParagraph:\n  \nTask:\nT\nLabels:\nL"), EmptySection);
  EXPECT_THROW(parse_generation("Plan:\np\nParagraph:\ng\nTask:\n[ ]\nLabels:\nL"), EmptySection);
  EXPECT_THROW(parse_generation("Plan:\np\nParagraph:\ng\nTask:\n\"..\"\nLabels:\nL"), EmptyAfterNormalization);
}

TEST(ParseGeneration, PerLineBracketedLabels) {
  const auto g = parse_generation("Plan:\np\nParagraph:\ng\nTask:\nT\nLabels:\n[Yes]\n[No]\n1. [Maybe]");
  EXPECT_EQ(g.labels, (std::vector<std::string>{"Yes", "No", "Maybe"}));
}

TEST(ParseGeneration, HeaderWordsInsideLinesAreContent) {
  const auto g = parse_generation("Plan:\nWrite the Paragraph: carefully\nParagraph:\nThe Task: is hard.\nTask:\nT\nLabels:\nL");
  EXPECT_EQ(g.plan, "Write the Paragraph: carefully");
  EXPECT_EQ(g.paragraph, "The Task: is hard.");
}

TEST(ParseGeneration, RoundTripProperty) {
  testing::GenerationResultGenerator gen(7);
  for (int i = 0; i < 2000; ++i) {
    const auto g = gen.next();
    const auto rendered = render_generation(g);
    ASSERT_EQ(parse_generation(rendered), g) << rendered;
  }
}

TEST(ParseScore, ReadsConclusion) {
  EXPECT_EQ(parse_score("The paragraph is fine.\nThus the coherency score is 8"), 8);
  EXPECT_EQ(parse_score("analysis\nthus the coherency score is 10."), 10);
  EXPECT_EQ(parse_score("Thus the coherency score is 1\n\n  "), 1);
  EXPECT_EQ(parse_score("Thus the Coherency Score Is   07."), 7);
}

TEST(ParseScore, RangeIsOneToTen) {
  for (int s = 1; s <= 10; ++s) EXPECT_EQ(parse_score("Thus the coherency score is " + std::to_string(s)), s);
  for (const char* bad : {"0", "11", "100", "99999999999999999999999"}) {
    try {
      parse_score(std::string("Thus the coherency score is ") + bad);
      FAIL() << bad;
    } catch (const ScoreOutOfRange& e) {
      EXPECT_TRUE(e.score() < 1 || e.score() > 10);
    }
  }
  try {
    parse_score("Thus the coherency score is 11");
  } catch (const ScoreOutOfRange& e) {
    EXPECT_EQ(e.score(), 11);
  }
}

TEST(ParseScore, StrictGrammar) {
  EXPECT_THROW(parse_score("no conclusion here"), ScoreLineMissing);
  EXPECT_THROW(parse_score(""), ScoreLineMissing);
  EXPECT_THROW(parse_score("Score: 8"), ScoreLineMissing);
  EXPECT_THROW(parse_score("Thus the coherency score is 8/10"), ScoreLineMissing);
  EXPECT_THROW(parse_score("Thus the coherency score is eight"), ScoreLineMissing);
  EXPECT_THROW(parse_score("Thus the coherency score is -3"), ScoreLineMissing);
  EXPECT_THROW(parse_score("Thus the coherency score is8"), ScoreLineMissing);
  EXPECT_THROW(parse_score("Overall, thus the coherency score is 8"), ScoreLineMissing);
}

TEST(ParseScore, LastMatchingLineWins) {
  EXPECT_EQ(parse_score("Thus the coherency score is 3\nOn reflection...\nThus the coherency score is 9."), 9);
  EXPECT_THROW(parse_score("Thus the coherency score is 5\nThus the coherency score is 0"), ScoreOutOfRange);
  EXPECT_EQ(parse_score("Thus the coherency score is 5\nThus the coherency score is high"), 5);
}

TEST(NormalizeTaskName, StripsAndFolds) {
  const auto k = normalize_task_name("[Text Classification]");
  EXPECT_EQ(k.key, "text classification");
  EXPECT_EQ(k.display, "Text Classification");
  EXPECT_EQ(normalize_task_name("Text classification.").key, normalize_task_name("TEXT CLASSIFICATION").key);
  EXPECT_EQ(normalize_task_name("  \"Sentiment   Analysis\"  ").display, "Sentiment Analysis");
  EXPECT_EQ(normalize_task_name("[\xE2\x80\x9CTopic Classification.\xE2\x80\x9D]").display, "Topic Classification");
  EXPECT_EQ(normalize_task_name("Named Entity Recognition (NER)").display, "Named Entity Recognition (NER)");
  EXPECT_EQ(normalize_task_name("(A) and (B)").display, "(A) and (B)");
}

TEST(NormalizeTaskName, EmptyAfterNormalization) {
  EXPECT_THROW(normalize_task_name("   "), EmptyAfterNormalization);
  EXPECT_THROW(normalize_task_name("[...]"), EmptyAfterNormalization);
  EXPECT_THROW(normalize_task_name("\"\""), EmptyAfterNormalization);
}

TEST(NormalizeTaskName, IdempotentOnDisplay) {
  for (const char* raw : {"[Text Classification]", "'Q&A.'", "  ((Intent  Detection)) ", "[\"x\"].", "Yes/No"}) {
    const auto once = normalize_task_name(raw);
    const auto twice = normalize_task_name(once.display);
    EXPECT_EQ(once, twice) << raw;
  }
}

}  // namespace
}  // namespace taskforge
