#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "purechat/cells.hpp"
#include "purechat/text.hpp"

// Utterance generation model: bidirectional recurrent encoder, learned
// bridge into a stacked recurrent decoder, softmax projection over the
// vocabulary. Trained with teacher forcing; candidates come from beam
// search in decreasing sequence log-likelihood.
namespace purechat::chat {

struct ChatConfig {
  int layers = 3;
  int hidden = 64;  // desk-scale default; 512 at paper scale
  int embed = 32;
  nn::CellKind cell = nn::CellKind::lstm;
  double lr = 0.2;
  int epochs = 200;
  int batch = 16;
  int k = 3;
  int max_len = 12;
};

struct BiCellLayer {
  nn::CellParams fwd, bwd;
};

struct Bridge {
  ad::Array W;  // H x 2H
  ad::Array b;  // H
};

struct ChatModel {
  ChatConfig cfg;
  std::size_t vocab = 0;
  ad::Array embedding;               // V x E, shared by encoder and decoder
  std::vector<BiCellLayer> encoder;  // cfg.layers entries
  std::vector<Bridge> bridges;       // decoder initial state per layer
  std::vector<nn::CellParams> decoder;
  ad::Array Wout;  // V x H
  ad::Array bout;  // V

  static ChatModel init(const ChatConfig& cfg, std::size_t vocab, Rng& rng);

  void for_each_param(const std::function<void(const std::string&, ad::Array&)>& f);
  void for_each_param(
      const std::function<void(const std::string&, const ad::Array&)>& f) const;
};

struct ScoredCandidate {
  std::vector<int> tokens;  // ends with eos
  double log_prob = 0.0;    // sum of per-token log p, <= 0
  std::optional<double> safety;
};

struct GenResult {
  std::vector<ScoredCandidate> candidates;  // decreasing log_prob
  bool truncated = false;  // fewer distinct sequences than requested
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-token cross-entropy
  double perplexity = 0.0;
};

struct TrainResult {
  ChatModel model;
  std::vector<EpochStats> history;
};

using Pair = std::pair<std::vector<int>, std::vector<int>>;

TrainResult train_chat(const std::vector<Pair>& pairs, const ChatConfig& cfg,
                       std::size_t vocab_size, std::uint64_t seed);

// Sum over reply tokens of log p(token | prefix, input); the reply must end
// with eos.
double sequence_log_prob(const ChatModel& m, std::span<const int> input_ids,
                         std::span<const int> reply_ids);

GenResult generate_candidates(const ChatModel& m, std::span<const int> input_ids,
                              int k, int max_len);

// Temperature sampling used inside purification when configured; records the
// untempered log-likelihood of each sample. Duplicates are possible.
GenResult sample_candidates(const ChatModel& m, std::span<const int> input_ids,
                            int k, int max_len, double temperature, Rng& rng);

// --- tape-level pieces -----------------------------------------------------

struct ChatVars {
  ad::Var embedding;
  std::vector<std::pair<nn::CellVars, nn::CellVars>> encoder;
  std::vector<std::pair<ad::Var, ad::Var>> bridges;  // W, b
  std::vector<nn::CellVars> decoder;
  ad::Var Wout, bout;
  std::vector<ad::Var> flat;  // registration order == for_each_param order
};

ChatVars register_model(ad::Tape& t, const ChatModel& m, bool trainable);

// Encoder pass + bridge; returns the decoder's initial state per layer.
std::vector<nn::CellState> encode_and_bridge(ad::Tape& t, const ChatVars& v,
                                             const ChatModel& m,
                                             std::span<const int> input_ids);

// One decoder step: consumes the previous token, advances states in place,
// returns the vocabulary logits.
ad::Var decode_step_var(ad::Tape& t, const ChatVars& v, const ChatModel& m,
                        int prev_token, std::vector<nn::CellState>& states);

ad::Var sequence_log_prob_var(ad::Tape& t, const ChatVars& v,
                              const ChatModel& m,
                              std::span<const int> input_ids,
                              std::span<const int> reply_ids);

}  // namespace purechat::chat
