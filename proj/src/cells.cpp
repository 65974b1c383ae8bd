#include "purechat/cells.hpp"

#include <cmath>

namespace purechat::nn {

using ad::Array;
using ad::Tape;
using ad::Var;

Array uniform_init(std::size_t rows, std::size_t cols, Rng& rng) {
  double s = 1.0 / std::sqrt(static_cast<double>(cols));
  Array a({rows, cols});
  for (std::size_t i = 0; i < a.numel(); ++i) a[i] = rng.uniform(-s, s);
  return a;
}

GruParams init_gru(std::size_t in, std::size_t hidden, Rng& rng) {
  GruParams p;
  p.Wr = uniform_init(hidden, in, rng);
  p.Wz = uniform_init(hidden, in, rng);
  p.Wh = uniform_init(hidden, in, rng);
  p.Ur = uniform_init(hidden, hidden, rng);
  p.Uz = uniform_init(hidden, hidden, rng);
  p.Uh = uniform_init(hidden, hidden, rng);
  p.br = Array({hidden});
  p.bz = Array({hidden});
  p.bh = Array({hidden});
  return p;
}

GruVars register_gru(Tape& t, const GruParams& p, bool trainable) {
  auto reg = [&](const Array& a) { return trainable ? t.param(a) : t.input(a); };
  GruVars v;
  v.Wr = reg(p.Wr);
  v.Wz = reg(p.Wz);
  v.Wh = reg(p.Wh);
  v.Ur = reg(p.Ur);
  v.Uz = reg(p.Uz);
  v.Uh = reg(p.Uh);
  v.br = reg(p.br);
  v.bz = reg(p.bz);
  v.bh = reg(p.bh);
  return v;
}

Var gru_cell(Tape& t, Var x, Var h_prev, const GruVars& p) {
  Var r = t.sigmoid(t.add(t.add(t.matvec(p.Wr, x), t.matvec(p.Ur, h_prev)), p.br));
  Var z = t.sigmoid(t.add(t.add(t.matvec(p.Wz, x), t.matvec(p.Uz, h_prev)), p.bz));
  Var hc = t.tanh_act(
      t.add(t.add(t.matvec(p.Wh, x), t.matvec(p.Uh, t.mul(r, h_prev))), p.bh));
  Var keep = t.mul(t.affine(z, -1.0, 1.0), h_prev);
  return t.add(keep, t.mul(z, hc));
}

namespace {
const std::string kGru = "gru";
const std::string kLstm = "lstm";
}  // namespace

const std::string& to_string(CellKind k) {
  return k == CellKind::gru ? kGru : kLstm;
}

CellKind cell_kind_from_string(const std::string& s) {
  if (s == kGru) return CellKind::gru;
  if (s == kLstm) return CellKind::lstm;
  throw ConfigError("unknown cell kind \"" + s + "\"; expected gru or lstm");
}

std::vector<std::string> gate_names(CellKind k) {
  if (k == CellKind::gru) return {"r", "z", "h"};
  return {"i", "f", "o", "g"};
}

CellParams init_cell(CellKind kind, std::size_t in, std::size_t hidden,
                     Rng& rng) {
  CellParams p;
  p.kind = kind;
  std::size_t gates = kind == CellKind::gru ? 3 : 4;
  for (std::size_t g = 0; g < gates; ++g) {
    p.W.push_back(uniform_init(hidden, in, rng));
    p.U.push_back(uniform_init(hidden, hidden, rng));
    p.b.push_back(Array({hidden}));
  }
  return p;
}

CellVars register_cell(Tape& t, const CellParams& p, bool trainable) {
  auto reg = [&](const Array& a) { return trainable ? t.param(a) : t.input(a); };
  CellVars v;
  v.kind = p.kind;
  for (std::size_t g = 0; g < p.W.size(); ++g) {
    v.W.push_back(reg(p.W[g]));
    v.U.push_back(reg(p.U[g]));
    v.b.push_back(reg(p.b[g]));
  }
  return v;
}

CellState zero_state(Tape& t, CellKind kind, std::size_t hidden) {
  CellState s;
  s.h = t.input(Array({hidden}));
  if (kind == CellKind::lstm) s.c = t.input(Array({hidden}));
  return s;
}

CellState cell_step(Tape& t, Var x, const CellState& prev, const CellVars& p) {
  auto gate = [&](std::size_t g, Var hv) {
    return t.add(t.add(t.matvec(p.W[g], x), t.matvec(p.U[g], hv)), p.b[g]);
  };
  if (p.kind == CellKind::gru) {
    GruVars gv{p.W[0], p.W[1], p.W[2], p.U[0], p.U[1], p.U[2],
               p.b[0], p.b[1], p.b[2]};
    return CellState{gru_cell(t, x, prev.h, gv), {}};
  }
  Var i = t.sigmoid(gate(0, prev.h));
  Var f = t.sigmoid(gate(1, prev.h));
  Var o = t.sigmoid(gate(2, prev.h));
  Var g = t.tanh_act(gate(3, prev.h));
  Var c = t.add(t.mul(f, prev.c), t.mul(i, g));
  Var h = t.mul(o, t.tanh_act(c));
  return CellState{h, c};
}

}  // namespace purechat::nn
