#include <gtest/gtest.h>

#include <cstring>

#include "freechunk/encoder.hpp"
#include "freechunk/error.hpp"
#include "freechunk/weights_io.hpp"

namespace fc = freechunk;

namespace {

fc::EncoderWeights weights() {
  fc::EncoderConfig cfg;
  cfg.d = 6;
  cfg.layers = 2;
  cfg.seed = 3;
  return fc::init_encoder_weights(cfg);
}

}  // namespace

TEST(WeightsIo, RoundTripIsBitExact) {
  const auto w = weights();
  const auto bytes = fc::serialize_weights(w, {{"note", "hi"}});
  nlohmann::json meta;
  const auto back = fc::deserialize_weights(bytes, &meta);
  EXPECT_EQ(meta["note"], "hi");
  EXPECT_EQ(back.d, w.d);
  EXPECT_EQ(back.normalize_output, w.normalize_output);
  EXPECT_EQ(fc::serialize_weights(back, {{"note", "hi"}}), bytes);
  EXPECT_EQ(back.layers[1].w_v, w.layers[1].w_v);
  EXPECT_EQ(back.layers[0].h_chk, w.layers[0].h_chk);
}

TEST(WeightsIo, HeaderDescribesTensors) {
  const auto bytes = fc::serialize_weights(weights());
  std::uint64_t header_len = 0;
  std::memcpy(&header_len, bytes.data(), 8);
  const auto header = nlohmann::json::parse(bytes.substr(8, header_len));
  EXPECT_EQ(header["format"], "freechunk-encoder");
  EXPECT_EQ(header["tensors"].size(), 24u);
  const auto& first = header["tensors"][0];
  EXPECT_EQ(first["name"], "layers.0.w_q");
  EXPECT_EQ(first["dtype"], "f32");
  EXPECT_EQ(first["offset"], 0);
  EXPECT_EQ(first["shape"], nlohmann::json({6, 6}));
  EXPECT_EQ(header["tensors"][1]["offset"], 36 * 4);
}

TEST(WeightsIo, CorruptInputsAreRejected) {
  const auto bytes = fc::serialize_weights(weights());
  EXPECT_THROW(fc::deserialize_weights(bytes.substr(0, 4)), fc::Error);
  EXPECT_THROW(fc::deserialize_weights(bytes.substr(0, bytes.size() - 4)), fc::Error);
  auto wrong = bytes;
  wrong[10] = '#';
  EXPECT_THROW(fc::deserialize_weights(wrong), fc::Error);
  EXPECT_THROW(fc::load_weights("/nonexistent/weights.bin"), fc::Error);
}

TEST(WeightsIo, FileRoundTrip) {
  const auto path = ::testing::TempDir() + "w.bin";
  fc::save_weights(path, weights());
  EXPECT_EQ(fc::serialize_weights(fc::load_weights(path)), fc::serialize_weights(weights()));
}
