#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "freechunk/embedders.hpp"

namespace freechunk {

/// Resolved settings shared by every CLI subcommand.
struct Config {
  // Embedding and encoder.
  std::size_t d = 64;
  std::size_t layers = 2;
  std::string granularities = "2,4,8,16,32";  // "g1,g2,...[:stride]"
  std::string embedder = "toy";               // toy | remote
  std::string teacher = "mean-pool";          // mean-pool | remote
  std::string weights;                        // encoder weight container path
  std::uint64_t seed = 0;

  // Baselines.
  std::size_t token_limit = 256;
  double percentile = 50.0;

  // Training.
  std::size_t epochs = 2;
  std::size_t batch_size = 1;
  double lr = 1e-4;
  double warmup_fraction = 1.0 / 3.0;
  double weight_decay = 0.01;
  std::size_t validation_interval = 1000;

  // Retrieval.
  std::size_t top_k = 10;
  std::size_t token_budget = 2048;

  // Remote embedder.
  std::string base_url = "http://127.0.0.1:8080/v1";
  std::string model = "text-embedding-3-small";
  std::string api_key_env = "OPENAI_API_KEY";
  std::size_t remote_batch_size = 64;
  double timeout = 30.0;
  std::size_t retries = 3;
  std::size_t max_in_flight = 1;

  RemoteEmbedderConfig remote() const;
};

inline constexpr const char* kEnvPrefix = "FREECHUNK_";

/// Resolves settings with precedence flags > environment > file > defaults.
///
/// The file is a flat JSON object keyed by setting name. Environment entries
/// use the upper-cased key with the FREECHUNK_ prefix (FREECHUNK_TOKEN_LIMIT);
/// unrelated environment variables are ignored. Flags map key -> text.
/// Unknown keys and values of the wrong type raise ConfigError.
Config config_load(const std::optional<std::string>& path, const std::map<std::string, std::string>& env,
                   const std::map<std::string, std::string>& flags);

/// FREECHUNK_* variables of the current process.
std::map<std::string, std::string> process_environment();

nlohmann::json config_to_json(const Config& config);

}  // namespace freechunk
