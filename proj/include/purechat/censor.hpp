#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "purechat/cells.hpp"
#include "purechat/text.hpp"

// Context-aware offensive-reply classifier: stacked Bi-GRU encoder with
// attention pooling over the input sentence, a reply-side GRU decoder that
// sees the pooled context vector at every timestep, and a tanh score head
// mapping the final decoder state to y_hat in [-1, 1].
namespace purechat::censor {

struct CensorConfig {
  int layers = 3;
  int hidden = 64;
  int embed = 32;
  double lr = 0.001;
  int epochs = 30;
  int batch = 16;
};

struct AttnParams {
  ad::Array Wu;  // 2H x 2H
  ad::Array bu;  // 2H
  ad::Array ua;  // 2H, trained jointly
};

// Decoder GRU whose gates read the concatenation [x, h_prev, v]; the reset
// gate multiplies the h_prev block of the candidate input, as in a plain GRU.
struct DecoderGruParams {
  ad::Array Wr, Wz, Wh;  // H x (in + H + 2H)
  ad::Array br, bz, bh;  // H
};

struct BiGruLayer {
  nn::GruParams fwd, bwd;
};

struct CensorModel {
  CensorConfig cfg;
  std::size_t vocab = 0;
  ad::Array embedding;              // V x E
  std::vector<BiGruLayer> encoder;  // cfg.layers entries
  AttnParams attn;
  std::vector<DecoderGruParams> decoder;
  ad::Array Wy;  // 1 x H
  ad::Array by;  // 1

  static CensorModel init(const CensorConfig& cfg, std::size_t vocab, Rng& rng);

  void for_each_param(const std::function<void(const std::string&, ad::Array&)>& f);
  void for_each_param(
      const std::function<void(const std::string&, const ad::Array&)>& f) const;
};

// --- single-step / single-layer ops (also the unit-test surface) ---------

// One GRU update; all components stay in (-1, 1) when h_prev does.
ad::Array gru_cell(const ad::Array& x, const ad::Array& h_prev,
                   const nn::GruParams& p);

// Per-timestep encoder states, row t = [fwd_h_t, bwd_h_t], stacked through
// the model's layers. Pad ids are dropped first; an empty sequence is an
// error.
ad::Array bigru_encode(const CensorModel& m, std::span<const int> input_ids);

ad::Array attention_pool(const ad::Array& H, const AttnParams& p);
std::vector<double> attention_weights(const ad::Array& H, const AttnParams& p);

ad::Array decoder_step(const ad::Array& x, const ad::Array& h_prev,
                       const ad::Array& v, const DecoderGruParams& p);

// --- scoring and training -------------------------------------------------

double score(const CensorModel& m, std::span<const int> input_ids,
             std::span<const int> reply_ids);

// Eq.-style loss on y_hat in (-1,1) with true label y in {-1,+1}, computed
// on p = (y_hat+1)/2 clamped to [eps, 1-eps].
double loss(double y_hat, int y);

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double test_acc = 0.0;
};

struct TrainResult {
  CensorModel model;  // parameters from the best test-accuracy epoch
  std::vector<EpochStats> history;
  int best_epoch = 0;
};

TrainResult train_censor(const text::SplitDataset& data,
                         const CensorConfig& cfg, std::size_t vocab_size,
                         std::uint64_t seed);

struct FilteredReply {
  std::vector<int> reply;
  double score = 0.0;
};

// Scores every candidate against the input, keeps strictly positive scores,
// sorts descending (stable, so equal scores keep their original order). An
// empty result means "no safe reply".
std::vector<FilteredReply> filter_candidates(
    const CensorModel& m, std::span<const int> input_ids,
    const std::vector<std::vector<int>>& candidates);

// --- tape-level graph builders (shared by training, scoring, purify) ------

struct DecoderGruVars {
  ad::Var Wr, Wz, Wh, br, bz, bh;
};

struct CensorVars {
  ad::Var embedding;
  std::vector<std::pair<nn::GruVars, nn::GruVars>> encoder;  // fwd, bwd
  ad::Var Wu, bu, ua;
  std::vector<DecoderGruVars> decoder;
  ad::Var Wy, by;
  std::vector<ad::Var> flat;  // registration order == for_each_param order
};

CensorVars register_model(ad::Tape& t, const CensorModel& m, bool trainable);
std::vector<ad::Var> encode_rows(ad::Tape& t, const CensorVars& v,
                                 const CensorModel& m,
                                 std::span<const int> input_ids);
ad::Var attention_pool_var(ad::Tape& t, ad::Var Wu, ad::Var bu, ad::Var ua,
                           const std::vector<ad::Var>& rows);
ad::Var decoder_step_var(ad::Tape& t, const DecoderGruVars& p, ad::Var x,
                         ad::Var h_prev, ad::Var v);
ad::Var score_var(ad::Tape& t, const CensorVars& v, const CensorModel& m,
                  std::span<const int> input_ids,
                  std::span<const int> reply_ids);
ad::Var loss_var(ad::Tape& t, ad::Var y_hat, int y);

// Pad-mask helper: drops pad ids; throws ContractError when nothing is left.
std::vector<int> strip_pads(std::span<const int> ids, const char* what);

}  // namespace purechat::censor
