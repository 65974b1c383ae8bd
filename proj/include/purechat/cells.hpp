#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "purechat/rng.hpp"
#include "purechat/tape.hpp"

// Recurrent cell primitives shared by the censorship and generation models.
namespace purechat::nn {

// Uniform(-s, s) with s = 1/sqrt(fan_in); fan_in is the column count.
ad::Array uniform_init(std::size_t rows, std::size_t cols, Rng& rng);

struct GruParams {
  ad::Array Wr, Wz, Wh;  // hidden x in
  ad::Array Ur, Uz, Uh;  // hidden x hidden
  ad::Array br, bz, bh;  // hidden
};

GruParams init_gru(std::size_t in, std::size_t hidden, Rng& rng);

struct GruVars {
  ad::Var Wr, Wz, Wh, Ur, Uz, Uh, br, bz, bh;
};

GruVars register_gru(ad::Tape& t, const GruParams& p, bool trainable);

// r = sig(Wr x + Ur h + br); z = sig(Wz x + Uz h + bz)
// hc = tanh(Wh x + Uh (r*h) + bh); out = (1-z)*h + z*hc
ad::Var gru_cell(ad::Tape& t, ad::Var x, ad::Var h_prev, const GruVars& p);

enum class CellKind { gru, lstm };

const std::string& to_string(CellKind k);
CellKind cell_kind_from_string(const std::string& s);

// Gate order: gru = r,z,h  lstm = i,f,o,g.
std::vector<std::string> gate_names(CellKind k);

struct CellParams {
  CellKind kind = CellKind::gru;
  std::vector<ad::Array> W, U, b;
};

CellParams init_cell(CellKind kind, std::size_t in, std::size_t hidden,
                     Rng& rng);

struct CellVars {
  CellKind kind = CellKind::gru;
  std::vector<ad::Var> W, U, b;
};

CellVars register_cell(ad::Tape& t, const CellParams& p, bool trainable);

struct CellState {
  ad::Var h;
  ad::Var c;  // lstm only
};

CellState zero_state(ad::Tape& t, CellKind kind, std::size_t hidden);
CellState cell_step(ad::Tape& t, ad::Var x, const CellState& prev,
                    const CellVars& p);

}  // namespace purechat::nn
