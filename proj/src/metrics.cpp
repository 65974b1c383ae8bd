#include "purechat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace purechat::metrics {

ClassificationReport classification_report(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::vector<std::string>& classes) {
  if (pairs.empty()) throw ContractError("classification_report: no pairs");
  if (classes.empty()) throw ContractError("classification_report: no classes");
  auto known = [&](const std::string& l) {
    return std::find(classes.begin(), classes.end(), l) != classes.end();
  };
  long correct = 0;
  for (const auto& [gold, pred] : pairs) {
    if (!known(gold))
      throw DataError("classification_report: unknown gold label \"" + gold + "\"");
    if (!known(pred))
      throw DataError("classification_report: unknown predicted label \"" +
                      pred + "\"");
    if (gold == pred) ++correct;
  }

  ClassificationReport rep;
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(pairs.size());
  double psum = 0.0, rsum = 0.0;
  for (const auto& c : classes) {
    PerClassCounts pc;
    pc.label = c;
    for (const auto& [gold, pred] : pairs) {
      bool g = gold == c, p = pred == c;
      if (g && p)
        ++pc.tp;
      else if (!g && p)
        ++pc.fp;
      else if (g && !p)
        ++pc.fn;
      else
        ++pc.tn;
    }
    pc.precision =
        pc.tp + pc.fp == 0
            ? 0.0
            : static_cast<double>(pc.tp) / static_cast<double>(pc.tp + pc.fp);
    pc.recall =
        pc.tp + pc.fn == 0
            ? 0.0
            : static_cast<double>(pc.tp) / static_cast<double>(pc.tp + pc.fn);
    psum += pc.precision;
    rsum += pc.recall;
    rep.per_class.push_back(std::move(pc));
  }
  rep.precision = psum / static_cast<double>(classes.size());
  rep.recall = rsum / static_cast<double>(classes.size());
  rep.f1 = rep.precision + rep.recall == 0.0
               ? 0.0
               : 2.0 * rep.precision * rep.recall / (rep.precision + rep.recall);
  return rep;
}

double offensive_rate(long n_offensive, long n_normal) {
  if (n_offensive < 0 || n_normal < 0)
    throw ContractError("offensive_rate: negative counts");
  if (n_normal == 0)
    throw ContractError("offensive_rate: undefined with zero normal replies");
  return static_cast<double>(n_offensive) / static_cast<double>(n_normal);
}

double offensive_rate(const std::vector<ReplyClass>& top1) {
  long off = 0, norm = 0;
  for (ReplyClass c : top1) (c == ReplyClass::offensive ? off : norm)++;
  return offensive_rate(off, norm);
}

namespace {

using Ngram = std::vector<int>;

std::map<Ngram, long> ngram_counts(const std::vector<int>& seq, int n) {
  std::map<Ngram, long> counts;
  if (n < 1 || seq.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= seq.size(); ++i)
    ++counts[Ngram(seq.begin() + static_cast<long>(i),
                   seq.begin() + static_cast<long>(i) + n)];
  return counts;
}

// Clipped match count and output n-gram total for one sentence.
std::pair<long, long> clipped_counts(const std::vector<int>& output,
                                     const std::vector<std::vector<int>>& refs,
                                     int n) {
  auto out_counts = ngram_counts(output, n);
  long total = 0;
  for (const auto& [ng, c] : out_counts) total += c;
  long matched = 0;
  for (const auto& [ng, c] : out_counts) {
    long best = 0;
    for (const auto& ref : refs) {
      auto rc = ngram_counts(ref, n);
      auto it = rc.find(ng);
      if (it != rc.end()) best = std::max(best, it->second);
    }
    matched += std::min(c, best);
  }
  return {matched, total};
}

double brevity(double len, const BleuConfig& cfg) {
  if (!cfg.bp_enabled) return 1.0;
  if (len > cfg.brevity_r) return 1.0;
  return std::exp(1.0 - cfg.brevity_r / len);
}

}  // namespace

double ngram_precision(const std::vector<int>& output,
                       const std::vector<std::vector<int>>& refs, int n) {
  if (n < 1) throw ContractError("ngram_precision: n must be >= 1");
  auto [matched, total] = clipped_counts(output, refs, n);
  if (total == 0) return 0.0;
  return static_cast<double>(matched) / static_cast<double>(total);
}

double modified_bleu(const std::vector<int>& output,
                     const std::vector<std::vector<int>>& refs,
                     const BleuConfig& cfg) {
  if (output.empty()) throw ContractError("modified_bleu: empty output");
  if (cfg.n_min < 1 || cfg.n_min > cfg.n_max)
    throw ConfigError("modified_bleu: bad n-gram range");
  double w = 1.0 / static_cast<double>(cfg.n_max - cfg.n_min + 1);
  double log_sum = 0.0;
  for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
    double p = ngram_precision(output, refs, n);
    if (p == 0.0) return 0.0;
    log_sum += w * std::log(p);
  }
  return brevity(static_cast<double>(output.size()), cfg) * std::exp(log_sum);
}

double corpus_bleu(const std::vector<BleuItem>& items, const BleuConfig& cfg) {
  if (items.empty()) throw ContractError("corpus_bleu: no items");
  if (cfg.n_min < 1 || cfg.n_min > cfg.n_max)
    throw ConfigError("corpus_bleu: bad n-gram range");
  double w = 1.0 / static_cast<double>(cfg.n_max - cfg.n_min + 1);
  double log_sum = 0.0;
  for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
    long matched = 0, total = 0;
    for (const auto& item : items) {
      auto [m, t] = clipped_counts(item.output, item.refs, n);
      matched += m;
      total += t;
    }
    if (matched == 0 || total == 0) return 0.0;
    log_sum +=
        w * std::log(static_cast<double>(matched) / static_cast<double>(total));
  }
  double bp_log = 0.0;
  if (cfg.bp_enabled) {
    for (const auto& item : items) {
      double len = static_cast<double>(item.output.size());
      if (len > 0.0 && len <= cfg.brevity_r)
        bp_log += 1.0 - cfg.brevity_r / len;
    }
    bp_log /= static_cast<double>(items.size());
  }
  return std::exp(bp_log) * std::exp(log_sum);
}

}  // namespace purechat::metrics
