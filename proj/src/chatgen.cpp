#include "purechat/chatgen.hpp"

#include <algorithm>
#include <cmath>

namespace purechat::chat {

using ad::Array;
using ad::Tape;
using ad::Var;
using nn::CellState;

namespace {

std::vector<int> checked_ids(std::span<const int> ids, std::size_t vocab,
                             const char* what) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab)
      throw DataError(std::string(what) + ": token id " + std::to_string(id) +
                      " outside vocabulary");
    if (id != text::Vocab::pad_id) out.push_back(id);
  }
  if (out.empty())
    throw ContractError(std::string(what) + ": empty token sequence");
  return out;
}

}  // namespace

ChatModel ChatModel::init(const ChatConfig& cfg, std::size_t vocab, Rng& rng) {
  if (cfg.layers < 1 || cfg.hidden < 1 || cfg.embed < 1)
    throw ConfigError("chat: layers, hidden and embed must be positive");
  if (vocab < 4) throw ConfigError("chat: vocab must include reserved ids");
  ChatModel m;
  m.cfg = cfg;
  m.vocab = vocab;
  std::size_t H = static_cast<std::size_t>(cfg.hidden);
  std::size_t E = static_cast<std::size_t>(cfg.embed);
  m.embedding = nn::uniform_init(vocab, E, rng);
  std::size_t in = E;
  for (int l = 0; l < cfg.layers; ++l) {
    BiCellLayer layer;
    layer.fwd = nn::init_cell(cfg.cell, in, H, rng);
    layer.bwd = nn::init_cell(cfg.cell, in, H, rng);
    m.encoder.push_back(std::move(layer));
    in = 2 * H;
  }
  for (int l = 0; l < cfg.layers; ++l) {
    Bridge b;
    b.W = nn::uniform_init(H, 2 * H, rng);
    b.b = Array({H});
    m.bridges.push_back(std::move(b));
  }
  std::size_t dec_in = E;
  for (int l = 0; l < cfg.layers; ++l) {
    m.decoder.push_back(nn::init_cell(cfg.cell, dec_in, H, rng));
    dec_in = H;
  }
  m.Wout = nn::uniform_init(vocab, H, rng);
  m.bout = Array({vocab});
  return m;
}

namespace {

template <class Model, class F>
void enumerate_params(Model& m, F&& f) {
  f("embedding", m.embedding);
  auto cell = [&](const std::string& base, auto& c) {
    auto gates = nn::gate_names(c.kind);
    for (std::size_t g = 0; g < gates.size(); ++g) {
      f(base + ".W" + gates[g], c.W[g]);
      f(base + ".U" + gates[g], c.U[g]);
      f(base + ".b" + gates[g], c.b[g]);
    }
  };
  for (std::size_t l = 0; l < m.encoder.size(); ++l) {
    std::string base = "enc.l" + std::to_string(l);
    cell(base + ".fwd", m.encoder[l].fwd);
    cell(base + ".bwd", m.encoder[l].bwd);
  }
  for (std::size_t l = 0; l < m.bridges.size(); ++l) {
    std::string base = "bridge.l" + std::to_string(l);
    f(base + ".W", m.bridges[l].W);
    f(base + ".b", m.bridges[l].b);
  }
  for (std::size_t l = 0; l < m.decoder.size(); ++l)
    cell("dec.l" + std::to_string(l), m.decoder[l]);
  f("proj.W", m.Wout);
  f("proj.b", m.bout);
}

}  // namespace

void ChatModel::for_each_param(
    const std::function<void(const std::string&, Array&)>& f) {
  enumerate_params(*this, f);
}

void ChatModel::for_each_param(
    const std::function<void(const std::string&, const Array&)>& f) const {
  enumerate_params(*this, f);
}

ChatVars register_model(Tape& t, const ChatModel& m, bool trainable) {
  ChatVars v;
  auto reg = [&](const Array& a) {
    Var var = trainable ? t.param(a) : t.input(a);
    v.flat.push_back(var);
    return var;
  };
  auto reg_cell = [&](const nn::CellParams& c) {
    nn::CellVars cv;
    cv.kind = c.kind;
    for (std::size_t g = 0; g < c.W.size(); ++g) {
      cv.W.push_back(reg(c.W[g]));
      cv.U.push_back(reg(c.U[g]));
      cv.b.push_back(reg(c.b[g]));
    }
    return cv;
  };
  v.embedding = reg(m.embedding);
  for (const auto& layer : m.encoder)
    v.encoder.emplace_back(reg_cell(layer.fwd), reg_cell(layer.bwd));
  for (const auto& b : m.bridges) v.bridges.emplace_back(reg(b.W), reg(b.b));
  for (const auto& d : m.decoder) v.decoder.push_back(reg_cell(d));
  v.Wout = reg(m.Wout);
  v.bout = reg(m.bout);
  return v;
}

std::vector<CellState> encode_and_bridge(Tape& t, const ChatVars& v,
                                         const ChatModel& m,
                                         std::span<const int> input_ids) {
  std::vector<int> ids = checked_ids(input_ids, m.vocab, "chat encoder");
  std::size_t T = ids.size();
  std::size_t H = static_cast<std::size_t>(m.cfg.hidden);

  std::vector<Var> xs;
  xs.reserve(T);
  for (int id : ids)
    xs.push_back(t.gather_row(v.embedding, static_cast<std::size_t>(id)));

  Var fwd_final, bwd_final;
  for (const auto& [fwd, bwd] : v.encoder) {
    std::vector<Var> hf(T), hb(T);
    CellState s = nn::zero_state(t, m.cfg.cell, H);
    for (std::size_t i = 0; i < T; ++i) {
      s = nn::cell_step(t, xs[i], s, fwd);
      hf[i] = s.h;
    }
    fwd_final = s.h;
    s = nn::zero_state(t, m.cfg.cell, H);
    for (std::size_t i = T; i-- > 0;) {
      s = nn::cell_step(t, xs[i], s, bwd);
      hb[i] = s.h;
    }
    bwd_final = s.h;
    for (std::size_t i = 0; i < T; ++i) xs[i] = t.concat({hf[i], hb[i]});
  }

  Var summary = t.concat({fwd_final, bwd_final});
  std::vector<CellState> states;
  for (std::size_t l = 0; l < v.bridges.size(); ++l) {
    CellState s;
    s.h = t.tanh_act(
        t.add(t.matvec(v.bridges[l].first, summary), v.bridges[l].second));
    if (m.cfg.cell == nn::CellKind::lstm) s.c = t.input(Array({H}));
    states.push_back(s);
  }
  return states;
}

Var decode_step_var(Tape& t, const ChatVars& v, const ChatModel& m,
                    int prev_token, std::vector<CellState>& states) {
  if (prev_token < 0 || static_cast<std::size_t>(prev_token) >= m.vocab)
    throw DataError("decode_step: token id " + std::to_string(prev_token) +
                    " outside vocabulary");
  Var x = t.gather_row(v.embedding, static_cast<std::size_t>(prev_token));
  for (std::size_t l = 0; l < states.size(); ++l) {
    states[l] = nn::cell_step(t, x, states[l], v.decoder[l]);
    x = states[l].h;
  }
  return t.add(t.matvec(v.Wout, x), v.bout);
}

Var sequence_log_prob_var(Tape& t, const ChatVars& v, const ChatModel& m,
                          std::span<const int> input_ids,
                          std::span<const int> reply_ids) {
  if (reply_ids.empty() || reply_ids.back() != text::Vocab::eos_id)
    throw ContractError("sequence_log_prob: reply must end with eos");
  for (int id : reply_ids)
    if (id < 0 || static_cast<std::size_t>(id) >= m.vocab)
      throw DataError("sequence_log_prob: token id " + std::to_string(id) +
                      " outside vocabulary");
  std::vector<CellState> states = encode_and_bridge(t, v, m, input_ids);
  std::vector<Var> lps;
  int prev = text::Vocab::bos_id;
  for (int target : reply_ids) {
    Var logits = decode_step_var(t, v, m, prev, states);
    lps.push_back(t.pick(t.log_softmax(logits), static_cast<std::size_t>(target)));
    prev = target;
  }
  return t.sum(t.stack_scalars(lps));
}

double sequence_log_prob(const ChatModel& m, std::span<const int> input_ids,
                         std::span<const int> reply_ids) {
  Tape t;
  ChatVars v = register_model(t, m, false);
  return t.value(sequence_log_prob_var(t, v, m, input_ids, reply_ids))[0];
}

TrainResult train_chat(const std::vector<Pair>& pairs, const ChatConfig& cfg,
                       std::size_t vocab_size, std::uint64_t seed) {
  if (pairs.empty()) throw ContractError("train_chat: no pairs");
  if (cfg.lr < 0.0) throw ConfigError("train_chat: negative learning rate");
  if (cfg.batch < 1) throw ConfigError("train_chat: batch must be >= 1");

  Rng root(seed);
  Rng init_rng = root.substream("chat-init");
  Rng shuffle_rng = root.substream("chat-shuffle");

  TrainResult out;
  out.model = ChatModel::init(cfg, vocab_size, init_rng);
  ChatModel& model = out.model;

  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double lp_sum = 0.0;
    std::size_t tok_sum = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch)) {
      std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      Tape t;
      ChatVars v = register_model(t, model, true);
      std::vector<Var> lps;
      std::size_t tokens = 0;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& [input, response] = pairs[order[i]];
        std::vector<int> target = response;
        target.push_back(text::Vocab::eos_id);
        lps.push_back(sequence_log_prob_var(t, v, model, input, target));
        tokens += target.size();
      }
      double inv = -1.0 / static_cast<double>(tokens);
      Var ce = t.affine(t.sum(t.stack_scalars(lps)), inv, 0.0);
      double ce_val = t.value(ce)[0];
      if (!std::isfinite(ce_val))
        throw NumericError("train_chat: diverged at epoch " +
                           std::to_string(epoch));
      lp_sum += ce_val * static_cast<double>(tokens);
      tok_sum += tokens;
      t.backward(ce);
      std::size_t vi = 0;
      model.for_each_param([&](const std::string&, Array& p) {
        const Array& g = t.grad(v.flat.at(vi++));
        for (std::size_t j = 0; j < p.numel(); ++j) p[j] -= cfg.lr * g[j];
      });
    }
    double ce = lp_sum / static_cast<double>(tok_sum);
    out.history.push_back(EpochStats{epoch, ce, std::exp(ce)});
  }
  return out;
}

namespace {

struct Beam {
  std::vector<int> tokens;
  double logp = 0.0;
  std::vector<CellState> states;
  int prev = text::Vocab::bos_id;
};

bool candidate_before(const ScoredCandidate& a, const ScoredCandidate& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

}  // namespace

GenResult generate_candidates(const ChatModel& m, std::span<const int> input_ids,
                              int k, int max_len) {
  if (k < 1) throw ContractError("generate_candidates: k must be >= 1");
  if (max_len < 1) throw ContractError("generate_candidates: max_len must be >= 1");

  Tape t;
  ChatVars v = register_model(t, m, false);

  std::vector<Beam> live;
  live.push_back(Beam{{}, 0.0, encode_and_bridge(t, v, m, input_ids),
                      text::Vocab::bos_id});
  std::vector<ScoredCandidate> finished;

  for (int step = 1; step <= max_len && !live.empty(); ++step) {
    struct Ext {
      double logp;
      std::size_t beam;
      int token;
    };
    std::vector<Ext> exts;
    std::vector<std::vector<CellState>> next_states(live.size());
    for (std::size_t b = 0; b < live.size(); ++b) {
      next_states[b] = live[b].states;
      Var logits = decode_step_var(t, v, m, live[b].prev, next_states[b]);
      const Array& lp = t.value(t.log_softmax(logits));
      if (step == max_len) {
        exts.push_back(Ext{live[b].logp + lp[text::Vocab::eos_id], b,
                           text::Vocab::eos_id});
      } else {
        for (std::size_t tok = 0; tok < m.vocab; ++tok)
          exts.push_back(
              Ext{live[b].logp + lp[tok], b, static_cast<int>(tok)});
      }
    }
    auto ext_before = [&](const Ext& a, const Ext& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      std::vector<int> ta = live[a.beam].tokens;
      ta.push_back(a.token);
      std::vector<int> tb = live[b.beam].tokens;
      tb.push_back(b.token);
      return ta < tb;
    };
    std::sort(exts.begin(), exts.end(), ext_before);

    std::vector<Beam> next_live;
    for (const Ext& e : exts) {
      std::vector<int> tokens = live[e.beam].tokens;
      tokens.push_back(e.token);
      if (e.token == text::Vocab::eos_id) {
        finished.push_back(ScoredCandidate{std::move(tokens), e.logp, {}});
      } else if (next_live.size() < static_cast<std::size_t>(k)) {
        next_live.push_back(
            Beam{std::move(tokens), e.logp, next_states[e.beam], e.token});
      }
    }
    live = std::move(next_live);
  }

  std::sort(finished.begin(), finished.end(), candidate_before);
  GenResult out;
  for (auto& c : finished) {
    if (out.candidates.size() == static_cast<std::size_t>(k)) break;
    out.candidates.push_back(std::move(c));
  }
  out.truncated = out.candidates.size() < static_cast<std::size_t>(k);
  return out;
}

GenResult sample_candidates(const ChatModel& m, std::span<const int> input_ids,
                            int k, int max_len, double temperature, Rng& rng) {
  if (k < 1) throw ContractError("sample_candidates: k must be >= 1");
  if (max_len < 1) throw ContractError("sample_candidates: max_len must be >= 1");
  if (!(temperature > 0.0))
    throw ConfigError("sample_candidates: temperature must be positive");

  Tape t;
  ChatVars v = register_model(t, m, false);
  std::vector<CellState> init = encode_and_bridge(t, v, m, input_ids);

  GenResult out;
  for (int s = 0; s < k; ++s) {
    std::vector<CellState> states = init;
    std::vector<int> tokens;
    double logp = 0.0;
    int prev = text::Vocab::bos_id;
    for (int step = 1; step <= max_len; ++step) {
      Var logits = decode_step_var(t, v, m, prev, states);
      const Array& lp = t.value(t.log_softmax(logits));
      int tok;
      if (step == max_len) {
        tok = text::Vocab::eos_id;
      } else {
        // Tempered weights from the untempered log-probs.
        std::vector<double> w(m.vocab);
        double total = 0.0;
        for (std::size_t i = 0; i < m.vocab; ++i) {
          w[i] = std::exp(lp[i] / temperature);
          total += w[i];
        }
        double u = rng.uniform() * total;
        double acc = 0.0;
        tok = static_cast<int>(m.vocab) - 1;
        for (std::size_t i = 0; i < m.vocab; ++i) {
          acc += w[i];
          if (u < acc) {
            tok = static_cast<int>(i);
            break;
          }
        }
      }
      tokens.push_back(tok);
      logp += lp[static_cast<std::size_t>(tok)];
      if (tok == text::Vocab::eos_id) break;
      prev = tok;
    }
    out.candidates.push_back(ScoredCandidate{std::move(tokens), logp, {}});
  }
  std::sort(out.candidates.begin(), out.candidates.end(), candidate_before);
  return out;
}

}  // namespace purechat::chat
