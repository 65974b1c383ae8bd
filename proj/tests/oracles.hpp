#pragma once

// Independent oracles used across the test and acceptance suites. These are
// deliberately written as straight-line scalar code with no dependency on
// the library's tape or kernels, so they can disagree with the
// implementation when it is wrong.

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include "purechat/array.hpp"
#include "purechat/cells.hpp"
#include "purechat/censor.hpp"

namespace oracle {

using purechat::ad::Array;
using Vec = std::vector<double>;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// y = W x + b over plain vectors; W given row-major as Array.
inline Vec affine(const Array& W, const Vec& x, const Array& b) {
  Vec y(W.rows(), 0.0);
  for (std::size_t i = 0; i < W.rows(); ++i) {
    double acc = b.numel() ? b[i] : 0.0;
    for (std::size_t j = 0; j < W.cols(); ++j) acc += W.at(i, j) * x[j];
    y[i] = acc;
  }
  return y;
}

// Straight transcription of the gated-unit update:
// r = sig(Wr x + Ur h + br), z = sig(Wz x + Uz h + bz),
// hc = tanh(Wh x + Uh (r.h) + bh), out = (1-z).h + z.hc
inline Vec gru_cell(const Vec& x, const Vec& h, const purechat::nn::GruParams& p) {
  std::size_t H = p.br.numel();
  Vec r(H), z(H), hc(H), out(H);
  for (std::size_t i = 0; i < H; ++i) {
    double ar = p.br[i], az = p.bz[i];
    for (std::size_t j = 0; j < x.size(); ++j) {
      ar += p.Wr.at(i, j) * x[j];
      az += p.Wz.at(i, j) * x[j];
    }
    for (std::size_t j = 0; j < H; ++j) {
      ar += p.Ur.at(i, j) * h[j];
      az += p.Uz.at(i, j) * h[j];
    }
    r[i] = sigmoid(ar);
    z[i] = sigmoid(az);
  }
  for (std::size_t i = 0; i < H; ++i) {
    double ah = p.bh[i];
    for (std::size_t j = 0; j < x.size(); ++j) ah += p.Wh.at(i, j) * x[j];
    for (std::size_t j = 0; j < H; ++j) ah += p.Uh.at(i, j) * (r[j] * h[j]);
    hc[i] = std::tanh(ah);
    out[i] = (1.0 - z[i]) * h[i] + z[i] * hc[i];
  }
  return out;
}

// Attention pooling: u_t = tanh(Wu h_t + bu); a = softmax_t(u_t . ua);
// v = sum_t a_t h_t. rows are the encoder states.
inline Vec attention_pool(const std::vector<Vec>& rows,
                          const purechat::censor::AttnParams& p) {
  std::size_t T = rows.size();
  Vec scores(T);
  for (std::size_t t = 0; t < T; ++t) {
    Vec u = affine(p.Wu, rows[t], p.bu);
    double dot = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) dot += u[i] * p.ua[i];
    scores[t] = dot;
  }
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double zsum = 0.0;
  Vec a(T);
  for (std::size_t t = 0; t < T; ++t) {
    a[t] = std::exp(scores[t] - mx);
    zsum += a[t];
  }
  for (std::size_t t = 0; t < T; ++t) a[t] /= zsum;
  Vec v(rows[0].size(), 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += a[t] * rows[t][i];
  return v;
}

// Context-injected decoder step: gates read [x, h, v]; the candidate reads
// [x, r.h, v].
inline Vec decoder_step(const Vec& x, const Vec& h, const Vec& v,
                        const purechat::censor::DecoderGruParams& p) {
  std::size_t H = p.br.numel();
  Vec cat;
  cat.insert(cat.end(), x.begin(), x.end());
  cat.insert(cat.end(), h.begin(), h.end());
  cat.insert(cat.end(), v.begin(), v.end());
  Vec r = affine(p.Wr, cat, p.br);
  Vec z = affine(p.Wz, cat, p.bz);
  for (std::size_t i = 0; i < H; ++i) {
    r[i] = sigmoid(r[i]);
    z[i] = sigmoid(z[i]);
  }
  Vec cat2;
  cat2.insert(cat2.end(), x.begin(), x.end());
  for (std::size_t i = 0; i < H; ++i) cat2.push_back(r[i] * h[i]);
  cat2.insert(cat2.end(), v.begin(), v.end());
  Vec hc = affine(p.Wh, cat2, p.bh);
  Vec out(H);
  for (std::size_t i = 0; i < H; ++i) {
    hc[i] = std::tanh(hc[i]);
    out[i] = (1.0 - z[i]) * h[i] + z[i] * hc[i];
  }
  return out;
}

// Central finite difference of f around x with step h.
inline double central_diff(const std::function<double(double)>& f, double x,
                           double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Relative agreement check used by every gradient test.
inline bool grad_close(double analytic, double numeric, double rel = 1e-4,
                       double abs_guard = 1e-8) {
  double diff = std::abs(analytic - numeric);
  if (diff <= abs_guard) return true;
  return diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

// Brute-force n-gram counting with a dictionary, for the BLEU oracle.
inline std::map<std::vector<int>, long> ngram_counts(const std::vector<int>& s,
                                                     int n) {
  std::map<std::vector<int>, long> out;
  if (n < 1 || s.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i)
    ++out[std::vector<int>(s.begin() + i, s.begin() + i + n)];
  return out;
}

inline double ngram_precision(const std::vector<int>& out,
                              const std::vector<std::vector<int>>& refs,
                              int n) {
  auto oc = ngram_counts(out, n);
  long total = 0, matched = 0;
  for (const auto& [ng, c] : oc) total += c;
  if (total == 0) return 0.0;
  for (const auto& [ng, c] : oc) {
    long best = 0;
    for (const auto& r : refs) {
      auto rc = ngram_counts(r, n);
      auto it = rc.find(ng);
      if (it != rc.end() && it->second > best) best = it->second;
    }
    matched += std::min(c, best);
  }
  return static_cast<double>(matched) / static_cast<double>(total);
}

}  // namespace oracle
