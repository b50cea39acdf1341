#pragma once

#include <string>

#include <json.hpp>

#include "freechunk/encoder.hpp"

namespace freechunk {

/// Encoder weight container.
///
/// Layout: an 8-byte little-endian unsigned header length N, N bytes of UTF-8
/// JSON header, then the tensor payload as little-endian IEEE-754 float32.
/// The header is
///
///   {"format": "freechunk-encoder", "version": 1, "d": 64, "layers": 2,
///    "normalize_output": true, "metadata": {...},
///    "tensors": [{"name": "layers.0.w_q", "shape": [64, 64],
///                 "dtype": "f32", "offset": 0}, ...]}
///
/// where offset is in bytes from the start of the payload.
void save_weights(const std::string& path, const EncoderWeights& weights,
                  const nlohmann::json& metadata = nlohmann::json::object());

EncoderWeights load_weights(const std::string& path, nlohmann::json* metadata = nullptr);

std::string serialize_weights(const EncoderWeights& weights,
                              const nlohmann::json& metadata = nlohmann::json::object());
EncoderWeights deserialize_weights(const std::string& bytes, nlohmann::json* metadata = nullptr);

}  // namespace freechunk
