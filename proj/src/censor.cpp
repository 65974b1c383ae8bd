#include "purechat/censor.hpp"

#include <algorithm>
#include <cmath>

namespace purechat::censor {

using ad::Array;
using ad::Tape;
using ad::Var;

namespace {
constexpr double kLossEps = 1e-7;
}

CensorModel CensorModel::init(const CensorConfig& cfg, std::size_t vocab,
                              Rng& rng) {
  if (cfg.layers < 1 || cfg.hidden < 1 || cfg.embed < 1)
    throw ConfigError("censor: layers, hidden and embed must be positive");
  if (vocab < 4) throw ConfigError("censor: vocab must include reserved ids");
  CensorModel m;
  m.cfg = cfg;
  m.vocab = vocab;
  std::size_t H = static_cast<std::size_t>(cfg.hidden);
  std::size_t E = static_cast<std::size_t>(cfg.embed);
  m.embedding = nn::uniform_init(vocab, E, rng);
  std::size_t in = E;
  for (int l = 0; l < cfg.layers; ++l) {
    BiGruLayer layer;
    layer.fwd = nn::init_gru(in, H, rng);
    layer.bwd = nn::init_gru(in, H, rng);
    m.encoder.push_back(std::move(layer));
    in = 2 * H;  // next layer consumes [fwd, bwd]
  }
  m.attn.Wu = nn::uniform_init(2 * H, 2 * H, rng);
  m.attn.bu = Array({2 * H});
  {
    Array ua({2 * H});
    double s = 1.0 / std::sqrt(static_cast<double>(2 * H));
    for (std::size_t i = 0; i < ua.numel(); ++i) ua[i] = rng.uniform(-s, s);
    m.attn.ua = std::move(ua);
  }
  std::size_t dec_in = E;
  for (int l = 0; l < cfg.layers; ++l) {
    std::size_t cat = dec_in + H + 2 * H;  // [x, h_prev, v]
    DecoderGruParams d;
    d.Wr = nn::uniform_init(H, cat, rng);
    d.Wz = nn::uniform_init(H, cat, rng);
    d.Wh = nn::uniform_init(H, cat, rng);
    d.br = Array({H});
    d.bz = Array({H});
    d.bh = Array({H});
    m.decoder.push_back(std::move(d));
    dec_in = H;
  }
  m.Wy = nn::uniform_init(1, H, rng);
  m.by = Array({1});
  return m;
}

namespace {

template <class Model, class F>
void enumerate_params(Model& m, F&& f) {
  f("embedding", m.embedding);
  for (std::size_t l = 0; l < m.encoder.size(); ++l) {
    auto& layer = m.encoder[l];
    std::string base = "enc.l" + std::to_string(l) + ".";
    auto dir = [&](const std::string& d, auto& g) {
      f(base + d + ".Wr", g.Wr);
      f(base + d + ".Wz", g.Wz);
      f(base + d + ".Wh", g.Wh);
      f(base + d + ".Ur", g.Ur);
      f(base + d + ".Uz", g.Uz);
      f(base + d + ".Uh", g.Uh);
      f(base + d + ".br", g.br);
      f(base + d + ".bz", g.bz);
      f(base + d + ".bh", g.bh);
    };
    dir("fwd", layer.fwd);
    dir("bwd", layer.bwd);
  }
  f("attn.Wu", m.attn.Wu);
  f("attn.bu", m.attn.bu);
  f("attn.ua", m.attn.ua);
  for (std::size_t l = 0; l < m.decoder.size(); ++l) {
    auto& d = m.decoder[l];
    std::string base = "dec.l" + std::to_string(l) + ".";
    f(base + "Wr", d.Wr);
    f(base + "Wz", d.Wz);
    f(base + "Wh", d.Wh);
    f(base + "br", d.br);
    f(base + "bz", d.bz);
    f(base + "bh", d.bh);
  }
  f("head.Wy", m.Wy);
  f("head.by", m.by);
}

}  // namespace

void CensorModel::for_each_param(
    const std::function<void(const std::string&, Array&)>& f) {
  enumerate_params(*this, f);
}

void CensorModel::for_each_param(
    const std::function<void(const std::string&, const Array&)>& f) const {
  enumerate_params(*this, f);
}

std::vector<int> strip_pads(std::span<const int> ids, const char* what) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (int id : ids)
    if (id != text::Vocab::pad_id) out.push_back(id);
  if (out.empty())
    throw ContractError(std::string(what) + ": empty token sequence");
  return out;
}

CensorVars register_model(Tape& t, const CensorModel& m, bool trainable) {
  CensorVars v;
  auto reg = [&](const Array& a) {
    Var var = trainable ? t.param(a) : t.input(a);
    v.flat.push_back(var);
    return var;
  };
  v.embedding = reg(m.embedding);
  auto reg_gru = [&](const nn::GruParams& g) {
    nn::GruVars gv;
    gv.Wr = reg(g.Wr);
    gv.Wz = reg(g.Wz);
    gv.Wh = reg(g.Wh);
    gv.Ur = reg(g.Ur);
    gv.Uz = reg(g.Uz);
    gv.Uh = reg(g.Uh);
    gv.br = reg(g.br);
    gv.bz = reg(g.bz);
    gv.bh = reg(g.bh);
    return gv;
  };
  for (const auto& layer : m.encoder)
    v.encoder.emplace_back(reg_gru(layer.fwd), reg_gru(layer.bwd));
  v.Wu = reg(m.attn.Wu);
  v.bu = reg(m.attn.bu);
  v.ua = reg(m.attn.ua);
  for (const auto& d : m.decoder)
    v.decoder.push_back(DecoderGruVars{reg(d.Wr), reg(d.Wz), reg(d.Wh),
                                       reg(d.br), reg(d.bz), reg(d.bh)});
  v.Wy = reg(m.Wy);
  v.by = reg(m.by);
  return v;
}

std::vector<Var> encode_rows(Tape& t, const CensorVars& v, const CensorModel& m,
                             std::span<const int> input_ids) {
  std::vector<int> ids = strip_pads(input_ids, "bigru_encode");
  std::size_t H = static_cast<std::size_t>(m.cfg.hidden);
  std::size_t T = ids.size();

  std::vector<Var> xs;
  xs.reserve(T);
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= m.vocab)
      throw DataError("bigru_encode: token id " + std::to_string(id) +
                      " outside vocabulary");
    xs.push_back(t.gather_row(v.embedding, static_cast<std::size_t>(id)));
  }

  for (const auto& [fwd, bwd] : v.encoder) {
    std::vector<Var> hf(T), hb(T);
    Var h = t.input(Array({H}));
    for (std::size_t i = 0; i < T; ++i) {
      h = nn::gru_cell(t, xs[i], h, fwd);
      hf[i] = h;
    }
    h = t.input(Array({H}));
    for (std::size_t i = T; i-- > 0;) {
      h = nn::gru_cell(t, xs[i], h, bwd);
      hb[i] = h;
    }
    for (std::size_t i = 0; i < T; ++i) xs[i] = t.concat({hf[i], hb[i]});
  }
  return xs;
}

Var attention_pool_var(Tape& t, Var Wu, Var bu, Var ua,
                       const std::vector<Var>& rows) {
  if (rows.empty()) throw ContractError("attention_pool: no rows");
  std::vector<Var> scores;
  scores.reserve(rows.size());
  for (Var h : rows) {
    Var u = t.tanh_act(t.add(t.matvec(Wu, h), bu));
    scores.push_back(t.sum(t.mul(u, ua)));
  }
  Var alpha = t.softmax(t.stack_scalars(scores));
  Var v;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Var term = t.smul(t.pick(alpha, i), rows[i]);
    v = i == 0 ? term : t.add(v, term);
  }
  return v;
}

Var decoder_step_var(Tape& t, const DecoderGruVars& p, Var x, Var h_prev,
                     Var v) {
  Var gate_in = t.concat({x, h_prev, v});
  Var r = t.sigmoid(t.add(t.matvec(p.Wr, gate_in), p.br));
  Var z = t.sigmoid(t.add(t.matvec(p.Wz, gate_in), p.bz));
  Var cand_in = t.concat({x, t.mul(r, h_prev), v});
  Var hc = t.tanh_act(t.add(t.matvec(p.Wh, cand_in), p.bh));
  Var keep = t.mul(t.affine(z, -1.0, 1.0), h_prev);
  return t.add(keep, t.mul(z, hc));
}

Var score_var(Tape& t, const CensorVars& v, const CensorModel& m,
              std::span<const int> input_ids, std::span<const int> reply_ids) {
  std::vector<Var> rows = encode_rows(t, v, m, input_ids);
  Var ctx = attention_pool_var(t, v.Wu, v.bu, v.ua, rows);

  std::vector<int> reply = strip_pads(reply_ids, "score");
  std::size_t H = static_cast<std::size_t>(m.cfg.hidden);
  std::vector<Var> h(m.decoder.size());
  for (auto& hv : h) hv = t.input(Array({H}));
  for (int id : reply) {
    if (id < 0 || static_cast<std::size_t>(id) >= m.vocab)
      throw DataError("score: token id " + std::to_string(id) +
                      " outside vocabulary");
    Var x = t.gather_row(v.embedding, static_cast<std::size_t>(id));
    for (std::size_t l = 0; l < m.decoder.size(); ++l) {
      h[l] = decoder_step_var(t, v.decoder[l], x, h[l], ctx);
      x = h[l];
    }
  }
  Var vy = h.back();
  Var out = t.tanh_act(t.add(t.matvec(v.Wy, vy), v.by));
  return t.pick(out, 0);
}

Var loss_var(Tape& t, Var y_hat, int y) {
  if (y != 1 && y != -1) throw ContractError("loss: y must be -1 or +1");
  Var p = t.clamp(t.affine(y_hat, 0.5, 0.5), kLossEps, 1.0 - kLossEps);
  double a = 0.5 * (1.0 + y);
  double b = 0.5 * (1.0 - y);
  Var lp = t.affine(t.log(p), -a, 0.0);
  Var lq = t.affine(t.log(t.affine(p, -1.0, 1.0)), -b, 0.0);
  return t.add(lp, lq);
}

// --- Array-level wrappers --------------------------------------------------

Array gru_cell(const Array& x, const Array& h_prev, const nn::GruParams& p) {
  Tape t;
  nn::GruVars gv = nn::register_gru(t, p, false);
  Var out = nn::gru_cell(t, t.input(x), t.input(h_prev), gv);
  return t.value(out);
}

Array bigru_encode(const CensorModel& m, std::span<const int> input_ids) {
  Tape t;
  CensorVars v = register_model(t, m, false);
  std::vector<Var> rows = encode_rows(t, v, m, input_ids);
  return t.value(t.stack_rows(rows));
}

Array attention_pool(const Array& H, const AttnParams& p) {
  if (H.ndim() != 2 || H.rows() == 0)
    throw ContractError("attention_pool: H must be a non-empty matrix");
  Tape t;
  Var Wu = t.input(p.Wu), bu = t.input(p.bu), ua = t.input(p.ua);
  std::vector<Var> rows;
  Var Hv = t.input(H);
  for (std::size_t r = 0; r < H.rows(); ++r)
    rows.push_back(t.gather_row(Hv, r));
  return t.value(attention_pool_var(t, Wu, bu, ua, rows));
}

std::vector<double> attention_weights(const Array& H, const AttnParams& p) {
  if (H.ndim() != 2 || H.rows() == 0)
    throw ContractError("attention_weights: H must be a non-empty matrix");
  Tape t;
  Var Wu = t.input(p.Wu), bu = t.input(p.bu), ua = t.input(p.ua);
  Var Hv = t.input(H);
  std::vector<Var> scores;
  for (std::size_t r = 0; r < H.rows(); ++r) {
    Var u = t.tanh_act(t.add(t.matvec(Wu, t.gather_row(Hv, r)), bu));
    scores.push_back(t.sum(t.mul(u, ua)));
  }
  return t.value(t.softmax(t.stack_scalars(scores))).data();
}

Array decoder_step(const Array& x, const Array& h_prev, const Array& v,
                   const DecoderGruParams& p) {
  Tape t;
  DecoderGruVars dv{t.input(p.Wr), t.input(p.Wz), t.input(p.Wh),
                    t.input(p.br), t.input(p.bz), t.input(p.bh)};
  Var out = decoder_step_var(t, dv, t.input(x), t.input(h_prev), t.input(v));
  return t.value(out);
}

double score(const CensorModel& m, std::span<const int> input_ids,
             std::span<const int> reply_ids) {
  Tape t;
  CensorVars v = register_model(t, m, false);
  return t.value(score_var(t, v, m, input_ids, reply_ids))[0];
}

double loss(double y_hat, int y) {
  if (y != 1 && y != -1) throw ContractError("loss: y must be -1 or +1");
  double p = std::min(std::max((y_hat + 1.0) / 2.0, kLossEps), 1.0 - kLossEps);
  return -(0.5 * (1.0 + y) * std::log(p) + 0.5 * (1.0 - y) * std::log(1.0 - p));
}

// --- training ---------------------------------------------------------------

namespace {

double accuracy_on(const CensorModel& m,
                   const std::vector<text::LabeledPair>& pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& p : pairs) {
    double s = score(m, p.input, p.response);
    bool pred_normal = s > 0.0;  // exactly 0 counts as offensive
    if (pred_normal == (p.y > 0)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(pairs.size());
}

}  // namespace

TrainResult train_censor(const text::SplitDataset& data,
                         const CensorConfig& cfg, std::size_t vocab_size,
                         std::uint64_t seed) {
  if (data.train.empty()) throw ContractError("train_censor: empty train set");
  if (cfg.lr < 0.0) throw ConfigError("train_censor: negative learning rate");
  if (cfg.epochs < 0) throw ConfigError("train_censor: negative epoch count");
  if (cfg.batch < 1) throw ConfigError("train_censor: batch must be >= 1");

  Rng root(seed);
  Rng init_rng = root.substream("censor-init");
  Rng shuffle_rng = root.substream("censor-shuffle");

  CensorModel model = CensorModel::init(cfg, vocab_size, init_rng);
  // Model selection uses the test split; with no test data it falls back to
  // train accuracy.
  const auto& eval_set = data.test.empty() ? data.train : data.test;

  TrainResult out;
  out.model = model;
  double best_acc = -1.0;

  std::vector<std::size_t> order(data.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch)) {
      std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      Tape t;
      CensorVars v = register_model(t, model, true);
      std::vector<Var> losses;
      for (std::size_t i = start; i < stop; ++i) {
        const auto& pair = data.train[order[i]];
        Var yh = score_var(t, v, model, pair.input, pair.response);
        losses.push_back(loss_var(t, yh, pair.y));
      }
      Var batch_loss = t.mean(t.stack_scalars(losses));
      double lval = t.value(batch_loss)[0];
      if (!std::isfinite(lval))
        throw NumericError("train_censor: diverged at epoch " +
                           std::to_string(epoch));
      loss_sum += lval * static_cast<double>(stop - start);
      t.backward(batch_loss);

      std::size_t vi = 0;
      model.for_each_param([&](const std::string&, Array& p) {
        const Array& g = t.grad(v.flat.at(vi++));
        for (std::size_t j = 0; j < p.numel(); ++j) p[j] -= cfg.lr * g[j];
      });
      if (vi != v.flat.size())
        throw ContractError("train_censor: parameter enumeration mismatch");
    }
    double train_loss = loss_sum / static_cast<double>(order.size());
    double acc = accuracy_on(model, eval_set);
    out.history.push_back(EpochStats{epoch, train_loss, acc});
    if (acc > best_acc) {
      best_acc = acc;
      out.model = model;
      out.best_epoch = epoch;
    }
  }
  if (cfg.epochs == 0) out.model = model;
  return out;
}

std::vector<FilteredReply> filter_candidates(
    const CensorModel& m, std::span<const int> input_ids,
    const std::vector<std::vector<int>>& candidates) {
  if (candidates.empty())
    throw ContractError("filter_candidates: no candidates");
  std::vector<double> scores(candidates.size());
#pragma omp parallel for schedule(static) if (candidates.size() >= 8)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(candidates.size());
       ++i)
    scores[static_cast<std::size_t>(i)] =
        score(m, input_ids, candidates[static_cast<std::size_t>(i)]);

  std::vector<FilteredReply> kept;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (scores[i] > 0.0) kept.push_back(FilteredReply{candidates[i], scores[i]});
  std::stable_sort(kept.begin(), kept.end(),
                   [](const FilteredReply& a, const FilteredReply& b) {
                     return a.score > b.score;
                   });
  return kept;
}

}  // namespace purechat::censor
