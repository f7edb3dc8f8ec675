#pragma once

#include <cstdint>

#include "scrnn/config.hpp"
#include "scrnn/corpus.hpp"
#include "scrnn/network.hpp"
#include "scrnn/variant.hpp"

namespace scrnn {

/// Everything needed to run inference with a trained model.
struct Checkpoint {
  ModelParams<float> params;
  Alphabet alphabet;
  Vocabulary vocab;
  EncodingVariant variant = EncodingVariant::Int;
  TrainingConfig config;
  std::uint64_t iteration = 0;
};

}  // namespace scrnn
