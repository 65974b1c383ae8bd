#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "purechat/censor.hpp"
#include "purechat/chatgen.hpp"

// Versioned JSON checkpoints: config echo, vocabulary dump, named parameter
// arrays in full double precision, and a free-form history block. Reloading
// reproduces every parameter bit-exactly; save(load(save(x))) is
// byte-identical.
namespace purechat {

inline constexpr int kCheckpointVersion = 1;

std::uint64_t vocab_hash(const text::Vocab& v);

struct CensorCheckpoint {
  censor::CensorModel model;
  text::Vocab vocab;
  nlohmann::ordered_json history;
};

struct ChatCheckpoint {
  chat::ChatModel model;
  text::Vocab vocab;
  nlohmann::ordered_json history;
};

void save_censor_checkpoint(const std::string& path,
                            const censor::CensorModel& model,
                            const text::Vocab& vocab,
                            const nlohmann::ordered_json& history);
CensorCheckpoint load_censor_checkpoint(const std::string& path);

void save_chat_checkpoint(const std::string& path, const chat::ChatModel& model,
                          const text::Vocab& vocab,
                          const nlohmann::ordered_json& history);
ChatCheckpoint load_chat_checkpoint(const std::string& path);

}  // namespace purechat
