#pragma once

#include <string>
#include <vector>

#include "purechat/errors.hpp"

// Evaluation suite: macro-averaged classification metrics, offensive-reply
// generation rate, and a dialogue-oriented BLEU restricted to 2..4-grams
// with an optional fixed-r brevity penalty (off by default).
namespace purechat::metrics {

struct PerClassCounts {
  std::string label;
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0.0;
  double recall = 0.0;
};

struct ClassificationReport {
  double accuracy = 0.0;
  double precision = 0.0;  // macro
  double recall = 0.0;     // macro
  double f1 = 0.0;         // from macro precision/recall
  std::vector<PerClassCounts> per_class;
};

// pairs are (gold, predicted); both must be members of classes. Classes with
// an empty denominator contribute 0 to the macro average.
ClassificationReport classification_report(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::vector<std::string>& classes);

enum class ReplyClass { normal, offensive };

// Offensive count divided by normal count (not by the total); errors when
// there are no normal replies.
double offensive_rate(const std::vector<ReplyClass>& top1);
double offensive_rate(long n_offensive, long n_normal);

struct BleuConfig {
  int n_min = 2;
  int n_max = 4;            // uniform weights 1/(n_max-n_min+1)
  double brevity_r = 3.0;   // fixed reference length when bp_enabled
  bool bp_enabled = false;
};

// Clipped n-gram precision of output against the references; 0 when the
// output is shorter than n.
double ngram_precision(const std::vector<int>& output,
                       const std::vector<std::vector<int>>& refs, int n);

// Geometric mean of the configured clipped precisions; any zero precision
// short-circuits to 0. With bp_enabled, outputs of length <= r are scaled by
// exp(1 - r/len).
double modified_bleu(const std::vector<int>& output,
                     const std::vector<std::vector<int>>& refs,
                     const BleuConfig& cfg);

struct BleuItem {
  std::vector<int> output;
  std::vector<std::vector<int>> refs;
};

// Micro aggregation: clipped counts and totals pool across the corpus before
// the geometric mean. The brevity penalty (when enabled) aggregates the
// per-sentence rule geometrically: exp(mean_s min(0, 1 - r/len_s)).
double corpus_bleu(const std::vector<BleuItem>& items, const BleuConfig& cfg);

}  // namespace purechat::metrics
