#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "purechat/censor.hpp"
#include "purechat/chatgen.hpp"
#include "purechat/metrics.hpp"

// Policy-gradient purification of a contaminated generation model. Each
// round generates k candidates per input, scores them with the censor
// (score == reward, in [-1,1]), and, when any candidate scores below zero,
// takes one ascent step on the round objective:
//
//   standard:  J = 1/N sum_i (A_i - b) log p(y_i | x_i)    over all candidates
//   fewshot:   J = 1/N sum_i (A_i - t) safe_i log p(...)   over rank-0 only,
//              safe_i = 1 for positive reward, else 0 (or 1 when the
//              penalize variant is configured)
//
// b / t is the mean reward of the records entering the objective.
namespace purechat::rl {

enum class PurifyMode { standard, fewshot };

const std::string& to_string(PurifyMode m);
PurifyMode mode_from_string(const std::string& s);

struct PurifyConfig {
  int rounds = 100;
  int k = 3;
  int max_len = 12;
  double lr = 0.05;
  PurifyMode mode = PurifyMode::standard;
  bool fewshot_penalize = false;
  bool sampling = false;      // sample candidates instead of beam search
  double temperature = 1.0;   // sampling only
  std::uint64_t seed = 0;
  metrics::BleuConfig bleu;
};

struct RewardRecord {
  std::vector<int> input_ids;
  chat::ScoredCandidate candidate;
  double reward = 0.0;    // censor score of (input, candidate)
  double baseline = 0.0;  // round mean reward over the objective's records
  int rank = 0;           // position in decreasing log-prob order
  std::size_t input_index = 0;  // position in the purify input list
};

struct ReportRow {
  int round = 0;
  double offensive_rate = 0.0;      // offensive / normal over rank-0 replies
  double offensive_fraction = 0.0;  // offensive / total, for plotting
  double mean_reward = 0.0;         // over rank-0 replies
  double bleu = 0.0;                // rank-0 replies vs reference set
  double objective = 0.0;           // round J
};

struct PurifyReport {
  std::vector<ReportRow> rows;  // one per completed round, indices from 1
};

struct PurifyInputs {
  std::vector<std::vector<int>> inputs;
  std::vector<std::vector<std::vector<int>>> refs;  // per input, for BLEU
};

// The payoff function: exactly the censor's score.
double reward(const censor::CensorModel& c, std::span<const int> input_ids,
              std::span<const int> reply_ids);

// Objective values on a fixed record set (the gradient path lives in the
// _var builders below). fewshot_objective requires rank-0 records.
double pg_objective(const chat::ChatModel& m,
                    const std::vector<RewardRecord>& records);
double fewshot_objective(const chat::ChatModel& m,
                         const std::vector<RewardRecord>& records,
                         bool penalize = false);

ad::Var pg_objective_var(ad::Tape& t, const chat::ChatVars& v,
                         const chat::ChatModel& m,
                         const std::vector<RewardRecord>& records);
ad::Var fewshot_objective_var(ad::Tape& t, const chat::ChatVars& v,
                              const chat::ChatModel& m,
                              const std::vector<RewardRecord>& records,
                              bool penalize);

struct PurifyResult {
  chat::ChatModel model;
  PurifyReport report;
};

PurifyResult purify(chat::ChatModel model, const censor::CensorModel& censor,
                    const PurifyInputs& inputs, const PurifyConfig& cfg);

// Trailing eos (and any pads) removed before censor scoring; a candidate
// that is nothing but eos is scored as the bare eos token.
std::vector<int> candidate_reply_tokens(const std::vector<int>& tokens);

}  // namespace purechat::rl
