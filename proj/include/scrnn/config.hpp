#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "scrnn/network.hpp"
#include "scrnn/noise.hpp"
#include "scrnn/variant.hpp"

namespace scrnn {

struct TrainingConfig {
  int beta = 3;            // BPTT window
  int batch_size = 20;     // sentences per mini-batch
  int epochs = 5;
  int hidden = 50;
  int vocab_size = 10000;  // including UNK
  EncodingVariant variant = EncodingVariant::Int;
  NoiseKind noise = NoiseKind::Jumble;
  double learning_rate = 0.5;
  double grad_clip = 5.0;  // global L2 norm cap
  std::uint64_t seed = 1;
  int eval_every = 100;    // mini-batches between dev evaluations
  int lr_decay_start = 3;  // learning rate is multiplied by lr_decay each epoch after this one
  double lr_decay = 0.5;
  double init_scale = 0.1;
  CandidateActivation candidate = CandidateActivation::Tanh;
  std::uint64_t dev_seed = 20160101;

  bool operator==(const TrainingConfig&) const = default;

  /// Learning rate used during the given 1-based epoch.
  double learning_rate_at(int epoch) const {
    double lr = learning_rate;
    for (int e = lr_decay_start + 1; e <= epoch; ++e) lr *= lr_decay;
    return lr;
  }

  void validate() const {
    if (beta <= 0 || batch_size <= 0 || epochs <= 0 || hidden <= 0 || vocab_size < 2 || eval_every <= 0)
      throw std::invalid_argument("training config: beta, batch_size, epochs, hidden, eval_every must be positive "
                                  "and vocab_size at least 2");
    if (!(learning_rate >= 0) || !(grad_clip > 0) || !(init_scale >= 0) || !(lr_decay > 0))
      throw std::invalid_argument("training config: learning_rate/init_scale must be non-negative, "
                                  "grad_clip and lr_decay positive");
    if (noise == NoiseKind::None) throw std::invalid_argument("training config: noise must not be none");
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size())
    throw std::invalid_argument("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  return value;
}

}  // namespace detail

/// Sets one field from its key=value spelling.
inline void apply_config_value(TrainingConfig& c, std::string_view key, std::string_view value) {
  using detail::parse_number;
  if (key == "beta") c.beta = parse_number<int>(key, value);
  else if (key == "batch_size") c.batch_size = parse_number<int>(key, value);
  else if (key == "epochs") c.epochs = parse_number<int>(key, value);
  else if (key == "hidden") c.hidden = parse_number<int>(key, value);
  else if (key == "vocab_size") c.vocab_size = parse_number<int>(key, value);
  else if (key == "variant") c.variant = parse_variant(value);
  else if (key == "noise") c.noise = parse_noise_kind(value);
  else if (key == "learning_rate") c.learning_rate = parse_number<double>(key, value);
  else if (key == "grad_clip") c.grad_clip = parse_number<double>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "eval_every") c.eval_every = parse_number<int>(key, value);
  else if (key == "lr_decay_start") c.lr_decay_start = parse_number<int>(key, value);
  else if (key == "lr_decay") c.lr_decay = parse_number<double>(key, value);
  else if (key == "init_scale") c.init_scale = parse_number<double>(key, value);
  else if (key == "candidate") c.candidate = parse_candidate_activation(value);
  else if (key == "dev_seed") c.dev_seed = parse_number<std::uint64_t>(key, value);
  else throw std::invalid_argument("unknown config key '" + std::string(key) + "'");
}

/// Flat key=value lines, one per field, in a fixed order.
inline std::string to_key_values(const TrainingConfig& c) {
  std::ostringstream out;
  out << "beta=" << c.beta << '\n'
      << "batch_size=" << c.batch_size << '\n'
      << "epochs=" << c.epochs << '\n'
      << "hidden=" << c.hidden << '\n'
      << "vocab_size=" << c.vocab_size << '\n'
      << "variant=" << to_string(c.variant) << '\n'
      << "noise=" << to_string(c.noise) << '\n'
      << "learning_rate=" << detail::format_double(c.learning_rate) << '\n'
      << "grad_clip=" << detail::format_double(c.grad_clip) << '\n'
      << "seed=" << c.seed << '\n'
      << "eval_every=" << c.eval_every << '\n'
      << "lr_decay_start=" << c.lr_decay_start << '\n'
      << "lr_decay=" << detail::format_double(c.lr_decay) << '\n'
      << "init_scale=" << detail::format_double(c.init_scale) << '\n'
      << "candidate=" << to_string(c.candidate) << '\n'
      << "dev_seed=" << c.dev_seed << '\n';
  return out.str();
}

/// Parses key=value lines. Blank lines and lines starting with '#' are
/// ignored; unknown keys are errors.
inline TrainingConfig parse_key_values(std::string_view text, TrainingConfig base = {}) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.remove_suffix(1);
    while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw std::invalid_argument("config line without '=': " + std::string(line));
    auto key = line.substr(0, eq), value = line.substr(eq + 1);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.remove_suffix(1);
    while (!value.empty() && (value.front() == ' ' || value.front() == '\t')) value.remove_prefix(1);
    apply_config_value(base, key, value);
  }
  return base;
}

}  // namespace scrnn
