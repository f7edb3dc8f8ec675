#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "scrnn/experiment.hpp"

using namespace scrnn;

namespace {

ExperimentData small_data() {
  auto corpus = read_corpus(std::string(SCRNN_DATA_DIR) + "/kjv/dev.txt");
  Corpus train(corpus.begin(), corpus.begin() + 60), dev(corpus.begin() + 60, corpus.begin() + 80),
      test(corpus.begin() + 80, corpus.begin() + 120);
  return ExperimentData::from_corpora(train, dev, test, 300);
}

TrainingConfig tiny() {
  TrainingConfig c;
  c.hidden = 6;
  c.epochs = 1;
  c.batch_size = 10;
  c.vocab_size = 300;
  c.eval_every = 1000;
  return c;
}

}  // namespace

TEST(Experiment, VariantTable) {
  const auto data = small_data();
  const auto rows = variant_experiment(data, tiny(), {1, 2});
  ASSERT_EQ(rows.size(), 4u);
  const char* names[] = {"int", "end", "beg", "all"};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(rows[k].condition, names[k]);
    EXPECT_EQ(rows[k].seed_accuracies.size(), 2u);
    EXPECT_NEAR(rows[k].accuracy, (rows[k].seed_accuracies[0] + rows[k].seed_accuracies[1]) / 2, 1e-12);
    EXPECT_EQ(rows[k].n, rows[0].n);
    EXPECT_EQ(rows[k].outcomes.size(), 2 * rows[k].n);
    EXPECT_FALSE(rows[k].example.empty());
  }
  EXPECT_TRUE(std::isnan(rows[0].p_value));
  for (std::size_t k = 1; k < 4; ++k) {
    EXPECT_GE(rows[k].p_value, 0.0);
    EXPECT_LE(rows[k].p_value, 1.0);
  }

  std::ostringstream csv;
  write_variant_table(csv, rows);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "condition,example,accuracy,n,p_value");
  std::getline(in, line);
  EXPECT_EQ(line.substr(0, 4), "int,");
  EXPECT_EQ(line.back(), ',');  // no p-value on the first row
  int lines = 1;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 4);
}

TEST(Experiment, ExamplesFollowJumbleSpans) {
  const auto data = small_data();
  const auto sentence = example_sentence(data.test);
  ASSERT_FALSE(sentence.empty());
  auto c = tiny();
  const auto shown = show_corrupted(sentence, c);
  EXPECT_EQ(tokenize_line(shown).size(), sentence.size());
  c.variant = EncodingVariant::All;
  EXPECT_NE(show_corrupted(sentence, c), shown);
}

TEST(Experiment, HiddenSweepReportsModelSize) {
  const auto data = small_data();
  const auto rows = hidden_experiment(data, tiny(), {2, 8}, {1});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].condition, "H=2");
  EXPECT_LT(rows[0].model_bytes, rows[1].model_bytes);
  std::ostringstream csv;
  write_sweep_table(csv, rows);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "condition,accuracy,n,p_value,model_kb");
}

TEST(Experiment, CsvQuoting) {
  std::vector<ConditionRow> rows(1);
  rows[0].condition = "x";
  rows[0].example = "a , \"b\"";
  std::ostringstream csv;
  write_variant_table(csv, rows);
  EXPECT_NE(csv.str().find("\"a , \"\"b\"\"\""), std::string::npos);
}
