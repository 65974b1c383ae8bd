#include "purechat/purify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace purechat::rl {

using ad::Array;
using ad::Tape;
using ad::Var;

namespace {

const std::string kStandard = "standard";
const std::string kFewshot = "fewshot";

double mean_reward_of(const std::vector<RewardRecord>& records) {
  double sum = 0.0;
  for (const auto& r : records) sum += r.reward;
  return sum / static_cast<double>(records.size());
}

}  // namespace

const std::string& to_string(PurifyMode m) {
  return m == PurifyMode::standard ? kStandard : kFewshot;
}

PurifyMode mode_from_string(const std::string& s) {
  if (s == kStandard) return PurifyMode::standard;
  if (s == kFewshot) return PurifyMode::fewshot;
  throw ConfigError("unknown purify mode \"" + s +
                    "\"; expected standard or fewshot");
}

double reward(const censor::CensorModel& c, std::span<const int> input_ids,
              std::span<const int> reply_ids) {
  return censor::score(c, input_ids, reply_ids);
}

std::vector<int> candidate_reply_tokens(const std::vector<int>& tokens) {
  std::vector<int> reply;
  for (int id : tokens)
    if (id != text::Vocab::pad_id) reply.push_back(id);
  if (!reply.empty() && reply.back() == text::Vocab::eos_id) reply.pop_back();
  if (reply.empty()) reply.push_back(text::Vocab::eos_id);
  return reply;
}

Var pg_objective_var(Tape& t, const chat::ChatVars& v, const chat::ChatModel& m,
                     const std::vector<RewardRecord>& records) {
  if (records.empty()) throw ContractError("pg_objective: no records");
  double b = mean_reward_of(records);
  double inv_n = 1.0 / static_cast<double>(records.size());
  Var j;
  bool first = true;
  for (const auto& r : records) {
    Var lp = chat::sequence_log_prob_var(t, v, m, r.input_ids,
                                         r.candidate.tokens);
    Var term = t.affine(lp, (r.reward - b) * inv_n, 0.0);
    j = first ? term : t.add(j, term);
    first = false;
  }
  return j;
}

Var fewshot_objective_var(Tape& t, const chat::ChatVars& v,
                          const chat::ChatModel& m,
                          const std::vector<RewardRecord>& records,
                          bool penalize) {
  if (records.empty()) throw ContractError("fewshot_objective: no records");
  for (const auto& r : records)
    if (r.rank != 0)
      throw ContractError(
          "fewshot_objective: records must be rank-0 candidates");
  double tmean = mean_reward_of(records);
  double inv_n = 1.0 / static_cast<double>(records.size());
  Var j;
  bool first = true;
  for (const auto& r : records) {
    double safe = r.reward > 0.0 ? 1.0 : (penalize ? 1.0 : 0.0);
    if (safe == 0.0) continue;
    Var lp = chat::sequence_log_prob_var(t, v, m, r.input_ids,
                                         r.candidate.tokens);
    Var term = t.affine(lp, (r.reward - tmean) * inv_n, 0.0);
    j = first ? term : t.add(j, term);
    first = false;
  }
  if (first) j = t.input(Array::scalar(0.0));  // fully masked round
  return j;
}

double pg_objective(const chat::ChatModel& m,
                    const std::vector<RewardRecord>& records) {
  Tape t;
  chat::ChatVars v = chat::register_model(t, m, false);
  return t.value(pg_objective_var(t, v, m, records))[0];
}

double fewshot_objective(const chat::ChatModel& m,
                         const std::vector<RewardRecord>& records,
                         bool penalize) {
  Tape t;
  chat::ChatVars v = chat::register_model(t, m, false);
  return t.value(fewshot_objective_var(t, v, m, records, penalize))[0];
}

PurifyResult purify(chat::ChatModel model, const censor::CensorModel& censor_m,
                    const PurifyInputs& inputs, const PurifyConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw ConfigError("purify: lr must be positive");
  if (cfg.rounds < 0) throw ConfigError("purify: rounds must be >= 0");
  if (cfg.k < 1) throw ConfigError("purify: k must be >= 1");
  if (cfg.max_len < 1) throw ConfigError("purify: max_len must be >= 1");
  if (inputs.inputs.empty()) throw ContractError("purify: no inputs");
  if (!inputs.refs.empty() && inputs.refs.size() != inputs.inputs.size())
    throw ContractError("purify: refs must align with inputs");

  Rng sample_rng = Rng(cfg.seed).substream("purify-sample");

  PurifyResult out;
  out.model = std::move(model);

  for (int round = 1; round <= cfg.rounds; ++round) {
    // Generate and score the round's candidates.
    std::vector<RewardRecord> all;
    for (std::size_t i = 0; i < inputs.inputs.size(); ++i) {
      chat::GenResult gen =
          cfg.sampling
              ? chat::sample_candidates(out.model, inputs.inputs[i], cfg.k,
                                        cfg.max_len, cfg.temperature, sample_rng)
              : chat::generate_candidates(out.model, inputs.inputs[i], cfg.k,
                                          cfg.max_len);
      for (std::size_t rank = 0; rank < gen.candidates.size(); ++rank) {
        RewardRecord r;
        r.input_ids = inputs.inputs[i];
        r.candidate = gen.candidates[rank];
        r.rank = static_cast<int>(rank);
        r.input_index = i;
        all.push_back(std::move(r));
      }
    }

#pragma omp parallel for schedule(static) if (all.size() >= 8)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(all.size()); ++i) {
      RewardRecord& r = all[static_cast<std::size_t>(i)];
      r.reward = reward(censor_m, r.input_ids,
                        candidate_reply_tokens(r.candidate.tokens));
      r.candidate.safety = r.reward;
    }

    bool trigger = std::any_of(all.begin(), all.end(),
                               [](const RewardRecord& r) { return r.reward < 0.0; });

    std::vector<RewardRecord> objective_records;
    for (const auto& r : all)
      if (cfg.mode == PurifyMode::standard || r.rank == 0)
        objective_records.push_back(r);
    double baseline = mean_reward_of(objective_records);
    for (auto& r : objective_records) r.baseline = baseline;

    Tape t;
    chat::ChatVars v = chat::register_model(t, out.model, true);
    Var j = cfg.mode == PurifyMode::standard
                ? pg_objective_var(t, v, out.model, objective_records)
                : fewshot_objective_var(t, v, out.model, objective_records,
                                        cfg.fewshot_penalize);
    double j_val = t.value(j)[0];
    if (!std::isfinite(j_val))
      throw NumericError("purify: diverged at round " + std::to_string(round));

    if (trigger) {
      t.backward(j);
      std::size_t vi = 0;
      bool finite = true;
      out.model.for_each_param([&](const std::string&, Array& p) {
        const Array& g = t.grad(v.flat.at(vi++));
        for (std::size_t x = 0; x < p.numel(); ++x) {
          p[x] += cfg.lr * g[x];  // ascent on J
          if (!std::isfinite(p[x])) finite = false;
        }
      });
      if (!finite)
        throw NumericError("purify: diverged at round " + std::to_string(round));
    }

    // Report row from the rank-0 candidates.
    long n_off = 0, n_norm = 0;
    double reward_sum = 0.0;
    std::vector<metrics::BleuItem> bleu_items;
    for (const auto& r : all) {
      if (r.rank != 0) continue;
      (r.reward > 0.0 ? n_norm : n_off)++;
      reward_sum += r.reward;
      if (!inputs.refs.empty()) {
        metrics::BleuItem item;
        item.output = candidate_reply_tokens(r.candidate.tokens);
        item.refs = inputs.refs[r.input_index];
        bleu_items.push_back(std::move(item));
      }
    }
    ReportRow row;
    row.round = round;
    row.offensive_rate =
        n_norm > 0 ? static_cast<double>(n_off) / static_cast<double>(n_norm)
                   : std::numeric_limits<double>::infinity();
    row.offensive_fraction =
        static_cast<double>(n_off) / static_cast<double>(n_off + n_norm);
    row.mean_reward = reward_sum / static_cast<double>(n_off + n_norm);
    row.bleu = bleu_items.empty() ? 0.0 : metrics::corpus_bleu(bleu_items, cfg.bleu);
    row.objective = j_val;
    out.report.rows.push_back(row);
  }
  return out;
}

}  // namespace purechat::rl
