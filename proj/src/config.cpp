#include "freechunk/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>

#include "freechunk/error.hpp"

extern char** environ;

namespace freechunk {
namespace {

enum class Kind { kInteger, kNumber, kString };

struct Field {
  Kind kind;
  std::function<void(Config&, const nlohmann::json&)> set;
  std::function<nlohmann::json(const Config&)> get;
};

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::kInteger: return "non-negative integer";
    case Kind::kNumber: return "number";
    case Kind::kString: return "string";
  }
  return "?";
}

template <typename M>
Field integer_field(M Config::*member) {
  return {Kind::kInteger, [member](Config& c, const nlohmann::json& j) { c.*member = j.get<M>(); },
          [member](const Config& c) { return nlohmann::json(c.*member); }};
}

Field number_field(double Config::*member) {
  return {Kind::kNumber, [member](Config& c, const nlohmann::json& j) { c.*member = j.get<double>(); },
          [member](const Config& c) { return nlohmann::json(c.*member); }};
}

Field string_field(std::string Config::*member) {
  return {Kind::kString, [member](Config& c, const nlohmann::json& j) { c.*member = j.get<std::string>(); },
          [member](const Config& c) { return nlohmann::json(c.*member); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> kFields = {
      {"d", integer_field(&Config::d)},
      {"layers", integer_field(&Config::layers)},
      {"granularities", string_field(&Config::granularities)},
      {"embedder", string_field(&Config::embedder)},
      {"teacher", string_field(&Config::teacher)},
      {"weights", string_field(&Config::weights)},
      {"seed", integer_field(&Config::seed)},
      {"token_limit", integer_field(&Config::token_limit)},
      {"percentile", number_field(&Config::percentile)},
      {"epochs", integer_field(&Config::epochs)},
      {"batch_size", integer_field(&Config::batch_size)},
      {"lr", number_field(&Config::lr)},
      {"warmup_fraction", number_field(&Config::warmup_fraction)},
      {"weight_decay", number_field(&Config::weight_decay)},
      {"validation_interval", integer_field(&Config::validation_interval)},
      {"top_k", integer_field(&Config::top_k)},
      {"token_budget", integer_field(&Config::token_budget)},
      {"base_url", string_field(&Config::base_url)},
      {"model", string_field(&Config::model)},
      {"api_key_env", string_field(&Config::api_key_env)},
      {"remote_batch_size", integer_field(&Config::remote_batch_size)},
      {"timeout", number_field(&Config::timeout)},
      {"retries", integer_field(&Config::retries)},
      {"max_in_flight", integer_field(&Config::max_in_flight)},
  };
  return kFields;
}

const Field& lookup(const std::string& key, const std::string& origin) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw Error(ErrorCode::kConfigError, "unknown key \"" + key + "\" in " + origin);
  return it->second;
}

void apply_json(Config& config, const std::string& key, const nlohmann::json& value, const std::string& origin) {
  const auto& field = lookup(key, origin);
  const bool ok = (field.kind == Kind::kInteger && value.is_number_unsigned()) ||
                  (field.kind == Kind::kNumber && value.is_number()) ||
                  (field.kind == Kind::kString && value.is_string());
  if (!ok) {
    throw Error(ErrorCode::kConfigError, "key \"" + key + "\" in " + origin + " expects a " +
                                             kind_name(field.kind) + ", got " + value.dump());
  }
  field.set(config, value);
}

void apply_text(Config& config, const std::string& key, const std::string& text, const std::string& origin) {
  const auto& field = lookup(key, origin);
  auto fail = [&] {
    throw Error(ErrorCode::kConfigError, "key \"" + key + "\" in " + origin + " expects a " +
                                             kind_name(field.kind) + ", got '" + text + "'");
  };
  switch (field.kind) {
    case Kind::kInteger: {
      std::uint64_t v = 0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc() || ptr != text.data() + text.size()) fail();
      field.set(config, nlohmann::json(v));
      break;
    }
    case Kind::kNumber: {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(text, &used);
      } catch (const std::exception&) {
        fail();
      }
      if (used != text.size()) fail();
      field.set(config, nlohmann::json(v));
      break;
    }
    case Kind::kString:
      field.set(config, nlohmann::json(text));
      break;
  }
}

}  // namespace

RemoteEmbedderConfig Config::remote() const {
  RemoteEmbedderConfig r;
  r.base_url = base_url;
  r.model = model;
  r.api_key_env = api_key_env;
  r.batch_size = remote_batch_size;
  r.timeout_seconds = timeout;
  r.max_retries = retries;
  r.max_in_flight = max_in_flight;
  return r;
}

Config config_load(const std::optional<std::string>& path, const std::map<std::string, std::string>& env,
                   const std::map<std::string, std::string>& flags) {
  Config config;
  if (path) {
    std::ifstream in(*path);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open config file " + *path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kConfigError, "config file " + *path + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorCode::kConfigError, "config file " + *path + " must hold a JSON object");
    for (const auto& [key, value] : j.items()) apply_json(config, key, value, "config file " + *path);
  }
  const std::string prefix = kEnvPrefix;
  for (const auto& [name, value] : env) {
    if (name.rfind(prefix, 0) != 0) continue;
    std::string key = name.substr(prefix.size());
    for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    apply_text(config, key, value, "environment variable " + name);
  }
  for (const auto& [key, value] : flags) apply_text(config, key, value, "command-line flags");
  return config;
}

std::map<std::string, std::string> process_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string entry = *e;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const auto name = entry.substr(0, eq);
    if (name.rfind(kEnvPrefix, 0) == 0) out[name] = entry.substr(eq + 1);
  }
  return out;
}

nlohmann::json config_to_json(const Config& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, field] : fields()) j[key] = field.get(config);
  return j;
}

}  // namespace freechunk
