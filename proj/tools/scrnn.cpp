#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "scrnn/config.hpp"
#include "scrnn/corpus.hpp"
#include "scrnn/eval.hpp"
#include "scrnn/experiment.hpp"
#include "scrnn/gradcheck.hpp"
#include "scrnn/inference.hpp"
#include "scrnn/model_io.hpp"
#include "scrnn/noise.hpp"
#include "scrnn/trainer.hpp"

#ifndef SCRNN_DATA_DIR
#define SCRNN_DATA_DIR "data"
#endif

namespace {

using namespace scrnn;
using json = nlohmann::json;

// Thrown for flag values that parse as strings but are not valid; reported
// like any other usage error.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

const std::vector<std::string> kConfigKeys = {
    "beta",     "batch_size",     "epochs",   "hidden",     "vocab_size", "variant",   "noise",     "learning_rate",
    "grad_clip", "seed",          "eval_every", "lr_decay_start", "lr_decay", "init_scale", "candidate", "dev_seed"};

std::map<std::string, std::string> default_values() {
  std::map<std::string, std::string> out;
  std::istringstream in(to_key_values(TrainingConfig{}));
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    out[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return out;
}

// Registers one --key flag per TrainingConfig field plus --config.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void add_to(CLI::App& app) {
    app.add_option("--config", config_file, "key=value config file; flags override it")->check(CLI::ExistingFile);
    const auto defaults = default_values();
    for (const auto& key : kConfigKeys) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      auto* opt = app.add_option(flag, values[key], key)->default_str(defaults.at(key));
      if (key == "variant") opt->check(CLI::IsMember({"int", "end", "beg", "all"}));
      if (key == "noise") opt->check(CLI::IsMember({"jumble", "delete", "insert"}));
      if (key == "candidate") opt->check(CLI::IsMember({"tanh", "sigmoid"}));
      options[key] = opt;
    }
  }

  TrainingConfig resolve(TrainingConfig base = {}) const {
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      if (!in) throw std::runtime_error("cannot read config '" + config_file + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      base = parse_key_values(ss.str(), base);
    }
    for (const auto& key : kConfigKeys) {
      if (options.at(key)->count() == 0) continue;
      try {
        apply_config_value(base, key, values.at(key));
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    try {
      base.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return base;
  }
};

Corpus read_input(const std::string& path) {
  if (path != "-") return read_corpus(path);
  Corpus out;
  for (std::string line; std::getline(std::cin, line);) {
    auto tokens = tokenize_line(line);
    if (!tokens.empty()) out.push_back(std::move(tokens));
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    seeds.push_back(detail::parse_number<std::uint64_t>("seeds", item));
  if (seeds.empty()) throw UsageError("--seeds: at least one seed required");
  return seeds;
}

template <typename T>
std::vector<T> parse_list(const std::string& name, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(detail::parse_number<T>(name, item));
  if (out.empty()) throw UsageError(name + ": empty list");
  return out;
}

json report_json(const EvalReport& r, std::size_t top_k) {
  json j;
  j["noise"] = std::string(to_string(r.noise));
  j["variant"] = std::string(to_string(r.variant));
  j["n_eligible"] = r.n_eligible;
  j["n_correct"] = r.n_correct;
  j["accuracy"] = r.accuracy;
  json errors = json::array();
  for (const auto& e : r.errors)
    errors.push_back({{"gold", e.gold}, {"predicted", e.predicted}, {"corrupted", e.corrupted}, {"sentence", e.sentence}});
  j["errors"] = std::move(errors);
  json groups = json::array();
  for (const auto& g : error_analysis(r, top_k))
    groups.push_back({{"gold", g.gold}, {"predicted", g.predicted}, {"count", g.count}});
  j["top_confusions"] = std::move(groups);
  return j;
}

void print_report_table(std::ostream& out, const EvalReport& r, std::size_t top_k) {
  out << std::left << std::setw(12) << "noise" << to_string(r.noise) << '\n'
      << std::setw(12) << "variant" << to_string(r.variant) << '\n'
      << std::setw(12) << "eligible" << r.n_eligible << '\n'
      << std::setw(12) << "correct" << r.n_correct << '\n'
      << std::setw(12) << "accuracy" << std::fixed << std::setprecision(2) << 100.0 * r.accuracy << "%\n";
  const auto groups = error_analysis(r, top_k);
  if (groups.empty()) return;
  out << "\ntop confusions (gold/predicted)\n";
  for (const auto& g : groups) out << "  " << std::setw(6) << g.count << g.gold << '/' << g.predicted << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-character RNN for robust word recognition"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();

  // build-vocab
  auto* vocab_cmd = app.add_subcommand("build-vocab", "Build the word vocabulary and alphabet from a corpus");
  std::string vocab_corpus, vocab_out, alphabet_out;
  std::size_t vocab_size = 10000;
  vocab_cmd->add_option("corpus", vocab_corpus, "Tokenized corpus, one sentence per line")->required()->check(CLI::ExistingFile);
  vocab_cmd->add_option("--size", vocab_size, "Vocabulary size including <unk>")->capture_default_str();
  vocab_cmd->add_option("-o,--out", vocab_out, "Vocabulary output file")->required();
  vocab_cmd->add_option("--alphabet-out", alphabet_out, "Optional alphabet output file");

  // corrupt
  auto* corrupt_cmd = app.add_subcommand("corrupt", "Apply character noise to a corpus and write a TSV");
  std::string corrupt_in, corrupt_out, corrupt_kind = "jumble", corrupt_variant = "int";
  std::uint64_t corrupt_seed = 1;
  corrupt_cmd->add_option("input", corrupt_in, "Corpus file ('-' for stdin)")->required();
  corrupt_cmd->add_option("--kind", corrupt_kind, "Noise kind")
      ->check(CLI::IsMember({"jumble", "delete", "insert"}))
      ->capture_default_str();
  corrupt_cmd->add_option("--seed", corrupt_seed, "Noise seed")->capture_default_str();
  corrupt_cmd->add_option("--variant", corrupt_variant, "Jumble span of this variant")
      ->check(CLI::IsMember({"int", "end", "beg", "all"}))
      ->capture_default_str();
  corrupt_cmd->add_option("-o,--out", corrupt_out, "Output TSV (default or - : stdout)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  std::string train_path, dev_path, model_out, curve_out, train_vocab;
  ConfigFlags train_flags;
  train_cmd->add_option("--train", train_path, "Training corpus")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--dev", dev_path, "Dev corpus for the learning curve")->check(CLI::ExistingFile);
  train_cmd->add_option("--vocab", train_vocab, "Vocabulary file (default: built from --train)")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("-o,--out", model_out, "Model output path")->required();
  train_cmd->add_option("--curve", curve_out, "Learning curve CSV output");
  train_flags.add_to(*train_cmd);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score a model on a corrupted test corpus");
  std::string eval_model, eval_test, eval_kind = "jumble", eval_json;
  std::uint64_t eval_seed = kTestNoiseSeed;
  std::size_t eval_top = 10;
  bool eval_baseline = false;
  eval_cmd->add_option("--model", eval_model, "Model file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--test", eval_test, "Clean test corpus")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--kind", eval_kind, "Noise kind")
      ->check(CLI::IsMember({"jumble", "delete", "insert"}))
      ->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed, "Test noise seed")->capture_default_str();
  eval_cmd->add_option("--json", eval_json, "Write the report as JSON to this path ('-' for stdout)");
  eval_cmd->add_option("--top", eval_top, "Confusions listed in the error analysis")->capture_default_str();
  eval_cmd->add_flag("--baseline", eval_baseline, "Score the edit-distance baseline on the model's vocabulary");

  // correct
  auto* correct_cmd = app.add_subcommand("correct", "Correct noisy text, one sentence per line");
  std::string correct_model, correct_in = "-";
  bool correct_baseline = false;
  correct_cmd->add_option("--model", correct_model, "Model file")->required()->check(CLI::ExistingFile);
  correct_cmd->add_option("input", correct_in, "Tokenized text ('-' for stdin)")->capture_default_str();
  correct_cmd->add_flag("--baseline", correct_baseline, "Use the edit-distance baseline instead of the model");

  // replicate
  auto* rep_cmd = app.add_subcommand("replicate", "Run a multi-model experiment and write a CSV table");
  std::string rep_experiment = "variants", rep_train = std::string(SCRNN_DATA_DIR) + "/kjv/train.txt",
              rep_dev = std::string(SCRNN_DATA_DIR) + "/kjv/dev.txt",
              rep_test = std::string(SCRNN_DATA_DIR) + "/kjv/test.txt", rep_out, rep_seeds = "1,2,3",
              rep_hidden = "5,10,20,50", rep_windows = "1,2,3,5", rep_curves;
  ConfigFlags rep_flags;
  rep_cmd->add_option("--experiment", rep_experiment, "Which table to build")
      ->check(CLI::IsMember({"variants", "noise", "hidden", "bptt"}))
      ->capture_default_str();
  rep_cmd->add_option("--train", rep_train, "Training corpus")->check(CLI::ExistingFile)->capture_default_str();
  rep_cmd->add_option("--dev", rep_dev, "Dev corpus")->check(CLI::ExistingFile)->capture_default_str();
  rep_cmd->add_option("--test", rep_test, "Test corpus")->check(CLI::ExistingFile)->capture_default_str();
  rep_cmd->add_option("--seeds", rep_seeds, "Comma-separated training seeds")->capture_default_str();
  rep_cmd->add_option("--hidden-sizes", rep_hidden, "Hidden sizes for --experiment hidden")->capture_default_str();
  rep_cmd->add_option("--windows", rep_windows, "BPTT windows for --experiment bptt")->capture_default_str();
  rep_cmd->add_option("--curves-dir", rep_curves, "Write one learning curve CSV per condition here");
  rep_cmd->add_option("-o,--out", rep_out, "Table CSV output (default or - : stdout)");
  rep_flags.add_to(*rep_cmd);

  // gradcheck
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference gradient check on a tiny network");
  std::uint64_t gc_seed = 7;
  gc_cmd->add_option("--seed", gc_seed, "Seed for the random network and inputs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::cerr << sub->help();
    return 2;
  }

  try {
    if (*vocab_cmd) {
      const auto corpus = read_corpus(vocab_corpus);
      const auto vocab = build_vocabulary(corpus, vocab_size);
      write_vocabulary(vocab, vocab_out);
      if (!alphabet_out.empty()) write_alphabet(build_alphabet(corpus), alphabet_out);
      std::cout << "vocabulary: " << vocab.size() << " words, token coverage " << std::fixed << std::setprecision(2)
                << 100.0 * vocab.coverage() << "%\n";
    } else if (*corrupt_cmd) {
      const auto corpus = read_input(corrupt_in);
      const auto noisy = corrupt_dataset(corpus, parse_noise_kind(corrupt_kind), corrupt_seed,
                                         jumble_span_for(parse_variant(corrupt_variant)));
      if (corrupt_out.empty() || corrupt_out == "-") {
        write_corruption_tsv(std::cout, noisy);
      } else {
        std::ofstream out(corrupt_out, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + corrupt_out + "'");
        write_corruption_tsv(out, noisy);
      }
    } else if (*train_cmd) {
      const auto config = train_flags.resolve();
      const auto train_corpus = read_corpus(train_path);
      const auto vocab = train_vocab.empty() ? build_vocabulary(train_corpus, static_cast<std::size_t>(config.vocab_size))
                                             : read_vocabulary(train_vocab);
      const auto alphabet = build_alphabet(train_corpus);
      const auto dev = dev_path.empty() ? Dataset{} : label_corpus(read_corpus(dev_path), vocab);
      std::cerr << to_key_values(config);
      std::cerr << "training: " << train_corpus.size() << " sentences, vocabulary " << vocab.size() << ", alphabet "
                << alphabet.size() << '\n';
      auto result = train(label_corpus(train_corpus, vocab), dev, alphabet, vocab, config, threads,
                          [](const LearningCurvePoint& p) {
                            std::cerr << "iter " << p.iteration << "  loss " << p.train_loss << "  dev "
                                      << p.dev_accuracy << '\n';
                          });
      save_model(result.checkpoint, model_out);
      if (!curve_out.empty()) emit_learning_curve(result.curve, curve_out);
    } else if (*eval_cmd) {
      const auto ckpt = load_model(eval_model);
      const auto gold = label_corpus(read_corpus(eval_test), ckpt.vocab);
      const auto noisy = corrupt_dataset(gold, parse_noise_kind(eval_kind), eval_seed, jumble_span_for(ckpt.variant));
      auto report = eval_baseline ? score_baseline(ckpt.vocab, noisy, gold) : accuracy(ckpt, noisy, gold, threads);
      report.noise = parse_noise_kind(eval_kind);
      report.variant = ckpt.variant;
      if (eval_json == "-") {
        std::cout << report_json(report, eval_top).dump(2) << '\n';
      } else {
        print_report_table(std::cout, report, eval_top);
        if (!eval_json.empty()) {
          std::ofstream out(eval_json, std::ios::trunc);
          if (!out) throw std::runtime_error("cannot write '" + eval_json + "'");
          out << report_json(report, eval_top).dump(2) << '\n';
        }
      }
    } else if (*correct_cmd) {
      const auto ckpt = load_model(correct_model);
      const EditDistanceCorrector baseline(ckpt.vocab);
      for (const auto& sentence : read_input(correct_in)) {
        std::vector<std::string> out;
        if (correct_baseline) {
          for (const auto& t : sentence) out.push_back(is_eligible(t) ? baseline.correct(t) : t);
        } else {
          out = correct_sentence(ckpt, sentence);
        }
        for (std::size_t i = 0; i < out.size(); ++i) std::cout << (i ? " " : "") << out[i];
        std::cout << '\n';
      }
    } else if (*rep_cmd) {
      const auto config = rep_flags.resolve();
      const auto seeds = parse_seeds(rep_seeds);
      const auto data = ExperimentData::load(rep_train, rep_dev, rep_test, static_cast<std::size_t>(config.vocab_size));
      auto log = [](const std::string& condition, std::uint64_t seed, const RunResult& run) {
        std::cerr << condition << " seed " << seed << ": accuracy " << run.report.accuracy << " ("
                  << run.report.n_correct << "/" << run.report.n_eligible << ")\n";
      };
      std::vector<ConditionRow> rows;
      if (rep_experiment == "variants") rows = variant_experiment(data, config, seeds, threads, log);
      else if (rep_experiment == "noise") rows = noise_experiment(data, config, seeds, threads, log);
      else if (rep_experiment == "hidden")
        rows = hidden_experiment(data, config, parse_list<int>("--hidden-sizes", rep_hidden), seeds, threads, log);
      else rows = bptt_experiment(data, config, parse_list<int>("--windows", rep_windows), seeds, threads, log);

      std::ostringstream table;
      if (rep_experiment == "variants" || rep_experiment == "noise") write_variant_table(table, rows);
      else write_sweep_table(table, rows);
      if (rep_out.empty() || rep_out == "-") {
        std::cout << table.str();
      } else {
        std::ofstream out(rep_out, std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + rep_out + "'");
        out << table.str();
      }
      if (!rep_curves.empty()) {
        std::filesystem::create_directories(rep_curves);
        for (const auto& r : rows) emit_learning_curve(r.curve, rep_curves + "/" + r.condition + ".csv");
      }
    } else if (*gc_cmd) {
      double worst = 0;
      for (auto v : kAllVariants) {
        TinyNetSpec spec;
        spec.variant = v;
        const auto r = run_tiny_gradcheck(gc_seed, spec);
        std::cout << std::left << std::setw(4) << to_string(v) << " max relative error " << std::scientific
                  << std::setprecision(3) << r.max_rel_error << "  (" << r.entries << " entries, worst "
                  << r.worst_tensor << ")\n";
        worst = std::max(worst, r.max_rel_error);
      }
      std::cout << "max relative error " << std::scientific << std::setprecision(3) << worst << '\n';
      return worst < 1e-4 ? 0 : 1;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
