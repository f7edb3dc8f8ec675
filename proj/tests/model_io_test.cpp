#include <gtest/gtest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>

#include "scrnn/model_io.hpp"

using namespace scrnn;

namespace {

Checkpoint make_checkpoint(Eigen::Index hidden, std::size_t n_chars, std::size_t n_words,
                           EncodingVariant variant = EncodingVariant::Int) {
  Checkpoint c;
  std::vector<char32_t> chars;
  for (std::size_t k = 0; k < n_chars; ++k) chars.push_back(static_cast<char32_t>(U'!' + k));
  c.alphabet = Alphabet(chars);
  std::vector<std::string> words;
  std::vector<std::uint64_t> freq;
  for (std::size_t k = 0; k < n_words; ++k) {
    words.push_back("w" + std::to_string(k));
    freq.push_back(1000 - k);
  }
  c.vocab = Vocabulary(words, freq, 123, 456);
  c.variant = variant;
  c.config.hidden = static_cast<int>(hidden);
  c.config.variant = variant;
  c.config.learning_rate = 0.1;
  c.iteration = 777;
  c.params = init_params<float>(5, hidden, static_cast<Eigen::Index>(dimension(variant, c.alphabet.size())),
                                static_cast<Eigen::Index>(c.vocab.size()), 0.3);
  return c;
}

ModelFormatError::Code error_code(const std::string& bytes) {
  try {
    deserialize_model(bytes);
  } catch (const ModelFormatError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ModelFormatError::Code::Io;
}

void put_u32(std::string& bytes, std::size_t at, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) bytes[at + static_cast<std::size_t>(k)] = static_cast<char>((v >> (8 * k)) & 0xFF);
}

}  // namespace

TEST(ModelIo, RoundTripIsBitExact) {
  for (auto v : kAllVariants) {
    const auto c = make_checkpoint(6, 10, 20, v);
    const auto bytes = serialize_model(c);
    const auto back = deserialize_model(bytes);
    EXPECT_TRUE(back.params == c.params);
    EXPECT_EQ(std::memcmp(back.params.lstm.weights.data(), c.params.lstm.weights.data(),
                          sizeof(float) * static_cast<std::size_t>(c.params.lstm.weights.size())),
              0);
    EXPECT_EQ(back.alphabet, c.alphabet);
    EXPECT_EQ(back.vocab, c.vocab);
    EXPECT_EQ(back.vocab.coverage(), c.vocab.coverage());
    EXPECT_EQ(back.variant, v);
    EXPECT_EQ(back.config, c.config);
    EXPECT_EQ(back.iteration, 777u);
    EXPECT_EQ(serialize_model(back), bytes);
  }
}

TEST(ModelIo, SpecialFloatsSurvive) {
  auto c = make_checkpoint(2, 3, 3);
  c.params.lstm.bias[0] = -0.0f;
  c.params.lstm.bias[1] = std::numeric_limits<float>::denorm_min();
  c.params.softmax.weights(0, 0) = std::numeric_limits<float>::max();
  const auto back = deserialize_model(serialize_model(c));
  EXPECT_TRUE(std::signbit(back.params.lstm.bias[0]));
  EXPECT_EQ(back.params.lstm.bias[1], std::numeric_limits<float>::denorm_min());
  EXPECT_EQ(back.params.softmax.weights(0, 0), std::numeric_limits<float>::max());
}

TEST(ModelIo, StartsWithMagic) {
  EXPECT_EQ(serialize_model(make_checkpoint(2, 3, 3)).substr(0, 6), "SCRNN1");
}

TEST(ModelIo, LittleEndianRowMajorTensors) {
  auto c = make_checkpoint(2, 3, 3);
  c.params.softmax.weights.setZero();
  c.params.softmax.weights(0, 1) = 1.0f;  // second value in row-major order
  const auto bytes = serialize_model(c);
  const auto at = bytes.rfind("W_h");
  ASSERT_NE(at, std::string::npos);
  const std::size_t data = at + 3 + 8;
  // 1.0f == 0x3f800000
  EXPECT_EQ(static_cast<unsigned char>(bytes[data + 4]), 0x00);
  EXPECT_EQ(static_cast<unsigned char>(bytes[data + 6]), 0x80);
  EXPECT_EQ(static_cast<unsigned char>(bytes[data + 7]), 0x3f);
}

TEST(ModelIo, BadMagic) {
  auto bytes = serialize_model(make_checkpoint(3, 4, 5));
  bytes[2] = 'X';
  EXPECT_EQ(error_code(bytes), ModelFormatError::Code::BadMagic);
  EXPECT_EQ(error_code(""), ModelFormatError::Code::BadMagic);
}

TEST(ModelIo, Truncation) {
  const auto bytes = serialize_model(make_checkpoint(3, 4, 5));
  for (std::size_t len = 6; len < bytes.size(); len += 7)
    EXPECT_EQ(error_code(bytes.substr(0, len)), ModelFormatError::Code::Truncated) << len;
  EXPECT_EQ(error_code(bytes.substr(0, bytes.size() - 1)), ModelFormatError::Code::Truncated);
}

TEST(ModelIo, DimensionMismatch) {
  const auto good = serialize_model(make_checkpoint(3, 4, 5));
  // Header field: alphabet size (fourth u32 of the metadata block).
  auto bytes = good;
  put_u32(bytes, 6 + 4 + 12, 9);
  EXPECT_EQ(error_code(bytes), ModelFormatError::Code::DimensionMismatch);

  // Tensor shape: rows of W_i.
  bytes = good;
  const auto at = bytes.find("W_i");
  ASSERT_NE(at, std::string::npos);
  put_u32(bytes, at + 3, 4);
  EXPECT_EQ(error_code(bytes), ModelFormatError::Code::DimensionMismatch);
}

TEST(ModelIo, TrailingBytes) {
  auto bytes = serialize_model(make_checkpoint(3, 4, 5));
  bytes.push_back('\0');
  EXPECT_EQ(error_code(bytes), ModelFormatError::Code::Malformed);
}

TEST(ModelIo, FullScaleFileSize) {
  // H = 50, 76-slot alphabet, 10k vocabulary: 555,800 floats.
  const auto c = make_checkpoint(50, 75, 9999);
  const auto bytes = serialize_model(c);
  const std::size_t floats = 4 * 50 * (50 + 228) + 4 * 50 + 10000 * 50;
  EXPECT_EQ(floats, 555800u);
  EXPECT_GT(bytes.size(), 4 * floats);
  EXPECT_GT(bytes.size(), 1'500'000u);
  EXPECT_LT(bytes.size(), 3'000'000u);
}

TEST(ModelIo, Files) {
  const auto path = (std::filesystem::temp_directory_path() / "scrnn_model_io.scrnn").string();
  const auto c = make_checkpoint(4, 6, 8);
  save_model(c, path);
  EXPECT_TRUE(load_model(path).params == c.params);
  std::remove(path.c_str());
  try {
    load_model(path);
    FAIL() << "missing file loaded";
  } catch (const ModelFormatError& e) {
    EXPECT_EQ(e.code(), ModelFormatError::Code::Io);
  }
}
