#include "freechunk/weights_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "freechunk/error.hpp"

namespace freechunk {
namespace {

constexpr const char* kFormat = "freechunk-encoder";
constexpr int kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

float get_f32(const std::string& in, std::size_t pos) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return std::bit_cast<float>(bits);
}

EncoderWeights skeleton(std::size_t d, std::size_t layers, std::size_t hidden) {
  EncoderWeights w;
  w.d = d;
  for (std::size_t i = 0; i < layers; ++i) {
    LayerWeights l;
    l.w_q = l.w_k = l.w_v = Matrix(d, d);
    l.h_chk = l.ln1_gain = l.ln1_bias = l.ln2_gain = l.ln2_bias = l.ffn_b2 = std::vector<float>(d);
    l.ffn_w1 = Matrix(d, hidden);
    l.ffn_b1 = std::vector<float>(hidden);
    l.ffn_w2 = Matrix(hidden, d);
    w.layers.push_back(std::move(l));
  }
  return w;
}

}  // namespace

std::string serialize_weights(const EncoderWeights& weights, const nlohmann::json& metadata) {
  validate_weights(weights);
  nlohmann::json header;
  header["format"] = kFormat;
  header["version"] = kVersion;
  header["d"] = weights.d;
  header["layers"] = weights.layers.size();
  header["normalize_output"] = weights.normalize_output;
  header["metadata"] = metadata;
  header["tensors"] = nlohmann::json::array();
  std::string payload;
  for_each_tensor(weights, [&](const std::string& name, const std::vector<std::size_t>& shape,
                               std::span<const float> values) {
    header["tensors"].push_back(
        {{"name", name}, {"shape", shape}, {"dtype", "f32"}, {"offset", payload.size()}});
    for (const float v : values) put_f32(payload, v);
  });
  const std::string header_text = header.dump();
  std::string out;
  put_u64(out, header_text.size());
  out += header_text;
  out += payload;
  return out;
}

EncoderWeights deserialize_weights(const std::string& bytes, nlohmann::json* metadata) {
  if (bytes.size() < 8) throw Error(ErrorCode::kParseError, "weight container shorter than its length prefix");
  const std::uint64_t header_len = get_u64(bytes, 0);
  if (header_len > bytes.size() - 8) throw Error(ErrorCode::kParseError, "weight header length exceeds file size");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("weight header: ") + e.what());
  }
  const std::size_t payload_start = 8 + header_len;
  try {
    if (header.at("format") != kFormat) throw Error(ErrorCode::kParseError, "not a freechunk weight container");
    if (header.at("version") != kVersion) {
      throw Error(ErrorCode::kParseError, "unsupported weight container version " + header.at("version").dump());
    }
    const auto d = header.at("d").get<std::size_t>();
    const auto layers = header.at("layers").get<std::size_t>();
    std::map<std::string, nlohmann::json> tensors;
    for (const auto& t : header.at("tensors")) tensors[t.at("name").get<std::string>()] = t;
    std::size_t hidden = 0;
    if (const auto it = tensors.find("layers.0.ffn_b1"); it != tensors.end()) {
      hidden = it->second.at("shape").at(0).get<std::size_t>();
    }
    auto weights = skeleton(d, layers, hidden);
    weights.normalize_output = header.at("normalize_output").get<bool>();
    for_each_tensor(weights, [&](const std::string& name, const std::vector<std::size_t>& shape,
                                 std::span<float> values) {
      const auto it = tensors.find(name);
      if (it == tensors.end()) throw Error(ErrorCode::kParseError, "missing tensor " + name);
      const auto& t = it->second;
      if (t.at("dtype") != "f32") throw Error(ErrorCode::kParseError, name + " has unsupported dtype");
      if (t.at("shape").get<std::vector<std::size_t>>() != shape) {
        throw Error(ErrorCode::kShapeMismatch, name + " has shape " + t.at("shape").dump());
      }
      const auto offset = t.at("offset").get<std::size_t>();
      if (payload_start + offset + 4 * values.size() > bytes.size()) {
        throw Error(ErrorCode::kParseError, name + " runs past the end of the container");
      }
      for (std::size_t i = 0; i < values.size(); ++i) values[i] = get_f32(bytes, payload_start + offset + 4 * i);
    });
    if (metadata) *metadata = header.value("metadata", nlohmann::json::object());
    validate_weights(weights);
    return weights;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("weight header: ") + e.what());
  }
}

void save_weights(const std::string& path, const EncoderWeights& weights, const nlohmann::json& metadata) {
  const auto bytes = serialize_weights(weights, metadata);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path);
}

EncoderWeights load_weights(const std::string& path, nlohmann::json* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_weights(buf.str(), metadata);
}

}  // namespace freechunk
