#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "purechat/censor.hpp"
#include "purechat/chatgen.hpp"
#include "purechat/purify.hpp"

namespace purechat {

// One seed drives everything; each component draws from a named substream.
struct RunConfig {
  std::uint64_t seed = 42;
  int min_freq = 1;
  censor::CensorConfig censor;
  chat::ChatConfig chat;
  rl::PurifyConfig purify;
};

// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::ordered_json to_json(const RunConfig& cfg);

void validate(const RunConfig& cfg);  // ConfigError on violations

}  // namespace purechat
