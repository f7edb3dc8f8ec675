#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "scrnn/config.hpp"
#include "scrnn/corpus.hpp"
#include "scrnn/eval.hpp"
#include "scrnn/model_io.hpp"
#include "scrnn/noise.hpp"
#include "scrnn/trainer.hpp"

namespace scrnn {

/// Train/dev/test splits labeled against a vocabulary built from train.
struct ExperimentData {
  Dataset train;
  Dataset dev;
  Dataset test;
  Alphabet alphabet;
  Vocabulary vocab;

  static ExperimentData from_corpora(const Corpus& train, const Corpus& dev, const Corpus& test,
                                     std::size_t vocab_size) {
    ExperimentData d;
    d.alphabet = build_alphabet(train);
    d.vocab = build_vocabulary(train, vocab_size);
    d.train = label_corpus(train, d.vocab);
    d.dev = label_corpus(dev, d.vocab);
    d.test = label_corpus(test, d.vocab);
    return d;
  }

  static ExperimentData load(const std::string& train_path, const std::string& dev_path,
                             const std::string& test_path, std::size_t vocab_size) {
    return from_corpora(read_corpus(train_path), read_corpus(dev_path), read_corpus(test_path), vocab_size);
  }
};

/// Test corruptions use their own seed so that every condition of an
/// experiment is scored on the same noisy sentences (per noise kind/span).
inline constexpr std::uint64_t kTestNoiseSeed = 0x7e57;

/// One trained and scored model.
struct RunResult {
  TrainResult trained;
  EvalReport report;
  std::size_t model_bytes = 0;
};

inline RunResult train_and_score(const ExperimentData& data, const TrainingConfig& config, unsigned threads = 1,
                                 std::uint64_t test_seed = kTestNoiseSeed) {
  RunResult run;
  run.trained = train(data.train, data.dev, data.alphabet, data.vocab, config, threads);
  const auto noisy = corrupt_for(data.test, config, test_seed);
  run.report = accuracy(run.trained.checkpoint, noisy, data.test, threads);
  run.report.noise = config.noise;
  run.model_bytes = serialize_model(run.trained.checkpoint).size();
  return run;
}

/// A row of an experiment table, averaged over seeds.
struct ConditionRow {
  std::string condition;
  std::string example;
  double accuracy = 0;
  std::size_t n = 0;
  /// Paired bootstrap p-value against the previous row; NaN for the first.
  double p_value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> seed_accuracies;
  std::size_t model_bytes = 0;
  /// Outcomes of every seed concatenated, aligned across rows.
  std::vector<std::uint8_t> outcomes;
  std::vector<LearningCurvePoint> curve;
};

using RunCallback = std::function<void(const std::string& condition, std::uint64_t seed, const RunResult&)>;

inline ConditionRow run_condition(const ExperimentData& data, const TrainingConfig& config,
                                  const std::vector<std::uint64_t>& seeds, std::string condition,
                                  unsigned threads = 1, const RunCallback& on_run = {}) {
  if (seeds.empty()) throw std::invalid_argument("experiment: no seeds");
  ConditionRow row;
  row.condition = std::move(condition);
  double sum = 0;
  for (auto seed : seeds) {
    auto cfg = config;
    cfg.seed = seed;
    auto run = train_and_score(data, cfg, threads);
    sum += run.report.accuracy;
    row.seed_accuracies.push_back(run.report.accuracy);
    row.n = run.report.n_eligible;
    row.model_bytes = run.model_bytes;
    row.outcomes.insert(row.outcomes.end(), run.report.outcomes.begin(), run.report.outcomes.end());
    if (row.curve.empty()) row.curve = run.trained.curve;
    if (on_run) on_run(row.condition, seed, run);
  }
  row.accuracy = sum / static_cast<double>(seeds.size());
  return row;
}

inline void fill_p_values(std::vector<ConditionRow>& rows, std::uint64_t seed = 1) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    rows[i].p_value = paired_bootstrap_p_value(rows[i - 1].outcomes, rows[i].outcomes, 10000, seed);
}

/// First test sentence with at least three eligible tokens, used to show
/// what each jumble condition looks like.
inline Sentence example_sentence(const Dataset& test) {
  for (const auto& s : test.sentences) {
    std::size_t eligible = 0;
    for (const auto& t : s) eligible += is_eligible(t.surface);
    if (eligible >= 3 && s.size() <= 16) {
      Sentence out;
      for (const auto& t : s) out.push_back(t.surface);
      return out;
    }
  }
  return test.sentences.empty() ? Sentence{} : surfaces(test).front();
}

inline std::string show_corrupted(const Sentence& sentence, const TrainingConfig& config) {
  std::string out;
  for (const auto& r : corrupt_sentence(sentence, config.noise, kTestNoiseSeed, 0, 0, jumble_span_for(config.variant))) {
    if (!out.empty()) out += ' ';
    out += r.corrupted;
  }
  return out;
}

/// One model per encoder variant, each trained and tested on the jumble
/// condition that permutes exactly the span the variant collapses.
inline std::vector<ConditionRow> variant_experiment(const ExperimentData& data, const TrainingConfig& base,
                                                    const std::vector<std::uint64_t>& seeds, unsigned threads = 1,
                                                    const RunCallback& on_run = {}) {
  const auto sentence = example_sentence(data.test);
  std::vector<ConditionRow> rows;
  for (auto v : kAllVariants) {
    auto cfg = base;
    cfg.variant = v;
    cfg.noise = NoiseKind::Jumble;
    auto row = run_condition(data, cfg, seeds, std::string(to_string(v)), threads, on_run);
    row.example = show_corrupted(sentence, cfg);
    rows.push_back(std::move(row));
  }
  fill_p_values(rows);
  return rows;
}

inline std::vector<ConditionRow> noise_experiment(const ExperimentData& data, const TrainingConfig& base,
                                                  const std::vector<std::uint64_t>& seeds, unsigned threads = 1,
                                                  const RunCallback& on_run = {}) {
  const auto sentence = example_sentence(data.test);
  std::vector<ConditionRow> rows;
  for (auto kind : {NoiseKind::Jumble, NoiseKind::Insert, NoiseKind::Delete}) {
    auto cfg = base;
    cfg.noise = kind;
    auto row = run_condition(data, cfg, seeds, std::string(to_string(kind)), threads, on_run);
    row.example = show_corrupted(sentence, cfg);
    rows.push_back(std::move(row));
  }
  fill_p_values(rows);
  return rows;
}

inline std::vector<ConditionRow> hidden_experiment(const ExperimentData& data, const TrainingConfig& base,
                                                   const std::vector<int>& sizes,
                                                   const std::vector<std::uint64_t>& seeds, unsigned threads = 1,
                                                   const RunCallback& on_run = {}) {
  std::vector<ConditionRow> rows;
  for (int h : sizes) {
    auto cfg = base;
    cfg.hidden = h;
    rows.push_back(run_condition(data, cfg, seeds, "H=" + std::to_string(h), threads, on_run));
  }
  fill_p_values(rows);
  return rows;
}

inline std::vector<ConditionRow> bptt_experiment(const ExperimentData& data, const TrainingConfig& base,
                                                 const std::vector<int>& windows,
                                                 const std::vector<std::uint64_t>& seeds, unsigned threads = 1,
                                                 const RunCallback& on_run = {}) {
  std::vector<ConditionRow> rows;
  for (int b : windows) {
    auto cfg = base;
    cfg.beta = b;
    rows.push_back(run_condition(data, cfg, seeds, "beta=" + std::to_string(b), threads, on_run));
  }
  fill_p_values(rows);
  return rows;
}

namespace detail {

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string format_p(double p) { return std::isnan(p) ? std::string() : format_double(p); }

}  // namespace detail

/// Variant table CSV: accuracy in percent, p-value against the row above.
inline void write_variant_table(std::ostream& out, const std::vector<ConditionRow>& rows) {
  out << "condition,example,accuracy,n,p_value\n";
  for (const auto& r : rows)
    out << detail::csv_field(r.condition) << ',' << detail::csv_field(r.example) << ','
        << detail::format_double(100.0 * r.accuracy) << ',' << r.n << ',' << detail::format_p(r.p_value) << '\n';
}

/// Sweep CSV (hidden sizes, BPTT windows): adds the serialized model size.
inline void write_sweep_table(std::ostream& out, const std::vector<ConditionRow>& rows) {
  out << "condition,accuracy,n,p_value,model_kb\n";
  for (const auto& r : rows)
    out << detail::csv_field(r.condition) << ',' << detail::format_double(100.0 * r.accuracy) << ',' << r.n << ','
        << detail::format_p(r.p_value) << ',' << (r.model_bytes + 512) / 1024 << '\n';
}

}  // namespace scrnn
