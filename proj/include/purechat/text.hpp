#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "purechat/errors.hpp"

namespace purechat::text {

enum class TaxonomyLabel { normal, violent, dangerous, offensive };

const std::string& to_string(TaxonomyLabel l);
TaxonomyLabel label_from_string(const std::string& s);  // DataError lists valid names

// Lowercases; strips @-mentions, #-topics and http(s) URLs; replaces
// . , ! ? ; : " ( ) with spaces; collapses whitespace. Idempotent.
std::string clean(const std::string& raw);

// Whitespace split of cleaned text.
std::vector<std::string> tokenize(const std::string& text);

// Token/id map with reserved ids 0..3.
struct Vocab {
  static constexpr int pad_id = 0;
  static constexpr int unk_id = 1;
  static constexpr int bos_id = 2;
  static constexpr int eos_id = 3;

  std::vector<std::string> id_to_token;  // dense [0, size)
  std::unordered_map<std::string, int> token_to_id;
  int min_freq = 1;

  std::size_t size() const { return id_to_token.size(); }
  int encode_token(const std::string& tok) const;
  std::vector<int> encode(const std::vector<std::string>& toks) const;
  const std::string& decode(int id) const;
  std::string decode_join(const std::vector<int>& ids) const;
};

// Ids after the reserved block go to tokens with frequency >= min_freq, in
// descending frequency order, ties broken lexicographically.
Vocab build_vocab(const std::vector<std::vector<std::string>>& corpus,
                  int min_freq);

struct LabeledPair {
  std::vector<int> input;
  std::vector<int> response;
  TaxonomyLabel taxonomy = TaxonomyLabel::normal;
  int y = 1;  // +1 iff taxonomy == normal, else -1
};

struct RawRecord {
  std::string input;
  std::string response;
  std::string label;
};

struct Dataset {
  std::vector<LabeledPair> pairs;
  Vocab vocab;
  std::size_t dropped = 0;  // records empty after cleaning
};

// JSON-lines file, one {"input","response","label"} object per line.
Dataset load_dataset(const std::string& path, int min_freq);
Dataset load_dataset(const std::string& path, const Vocab& vocab);

// Same pipeline starting from in-memory records.
Dataset encode_records(const std::vector<RawRecord>& records, int min_freq);
Dataset encode_records(const std::vector<RawRecord>& records, const Vocab& vocab);

void write_jsonl(const std::string& path, const std::vector<RawRecord>& records);
std::vector<RawRecord> read_jsonl(const std::string& path);

// All records of `category` plus an equal-count seeded sample of normal
// records, shuffled. category must not be normal.
std::vector<LabeledPair> build_subset(const std::vector<LabeledPair>& data,
                                      TaxonomyLabel category,
                                      std::uint64_t seed);

struct SplitDataset {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> test;
  std::uint64_t seed = 0;
};

// Seeded shuffle then prefix split at round(ratio * n).
SplitDataset split(const std::vector<LabeledPair>& data, double ratio,
                   std::uint64_t seed);

}  // namespace purechat::text
