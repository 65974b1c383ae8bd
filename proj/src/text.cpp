#include "purechat/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "purechat/rng.hpp"

namespace purechat::text {

namespace {
const std::string kLabelNames[] = {"normal", "violent", "dangerous",
                                   "offensive"};
constexpr char kPunct[] = ".,!?;:\"()";

bool is_punct(char c) {
  for (char p : kPunct)
    if (p && p == c) return true;
  return false;
}
}  // namespace

const std::string& to_string(TaxonomyLabel l) {
  return kLabelNames[static_cast<int>(l)];
}

TaxonomyLabel label_from_string(const std::string& s) {
  for (int i = 0; i < 4; ++i)
    if (s == kLabelNames[i]) return static_cast<TaxonomyLabel>(i);
  throw DataError("unknown label \"" + s +
                  "\"; valid labels are normal, violent, dangerous, offensive");
}

std::string clean(const std::string& raw) {
  std::string s;
  s.reserve(raw.size());
  for (char c : raw)
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

  // Strip URLs first so their punctuation never reaches the next passes.
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s.compare(i, 7, "http://") == 0 || s.compare(i, 8, "https://") == 0) {
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])))
        ++i;
      continue;
    }
    if (s[i] == '@' || s[i] == '#') {
      while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i])))
        ++i;
      continue;
    }
    out.push_back(s[i]);
    ++i;
  }

  std::string res;
  res.reserve(out.size());
  bool pending_space = false;
  for (char c : out) {
    if (std::isspace(static_cast<unsigned char>(c)) || is_punct(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !res.empty()) res.push_back(' ');
    pending_space = false;
    res.push_back(c);
  }
  return res;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> toks;
  std::istringstream in(text);
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

int Vocab::encode_token(const std::string& tok) const {
  auto it = token_to_id.find(tok);
  return it == token_to_id.end() ? unk_id : it->second;
}

std::vector<int> Vocab::encode(const std::vector<std::string>& toks) const {
  std::vector<int> ids;
  ids.reserve(toks.size());
  for (const auto& t : toks) ids.push_back(encode_token(t));
  return ids;
}

const std::string& Vocab::decode(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token.size())
    throw DataError("vocab: id " + std::to_string(id) + " out of range");
  return id_to_token[static_cast<std::size_t>(id)];
}

std::string Vocab::decode_join(const std::vector<int>& ids) const {
  std::string s;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) s += ' ';
    s += decode(ids[i]);
  }
  return s;
}

Vocab build_vocab(const std::vector<std::vector<std::string>>& corpus,
                  int min_freq) {
  if (min_freq < 1) throw ContractError("build_vocab: min_freq must be >= 1");
  if (corpus.empty()) throw DataError("build_vocab: empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& toks : corpus)
    for (const auto& t : toks) ++freq[t];

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, f] : freq)
    if (f >= static_cast<std::size_t>(min_freq)) kept.emplace_back(tok, f);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  v.min_freq = min_freq;
  v.id_to_token = {"<pad>", "<unk>", "<bos>", "<eos>"};
  for (const auto& [tok, f] : kept) v.id_to_token.push_back(tok);
  for (std::size_t i = 0; i < v.id_to_token.size(); ++i)
    v.token_to_id[v.id_to_token[i]] = static_cast<int>(i);
  return v;
}

namespace {

struct ParsedRecord {
  std::vector<std::string> input_toks;
  std::vector<std::string> response_toks;
  TaxonomyLabel taxonomy;
};

// Clean + tokenize + label-check; empty records come back with empty token
// lists and are dropped by the caller.
ParsedRecord parse_record(const RawRecord& r) {
  ParsedRecord p;
  p.input_toks = tokenize(clean(r.input));
  p.response_toks = tokenize(clean(r.response));
  p.taxonomy = label_from_string(r.label);
  return p;
}

Dataset encode_parsed(const std::vector<ParsedRecord>& parsed, Vocab vocab) {
  Dataset ds;
  ds.vocab = std::move(vocab);
  for (const auto& p : parsed) {
    if (p.input_toks.empty() || p.response_toks.empty()) {
      ++ds.dropped;
      continue;
    }
    LabeledPair lp;
    lp.input = ds.vocab.encode(p.input_toks);
    lp.response = ds.vocab.encode(p.response_toks);
    lp.taxonomy = p.taxonomy;
    lp.y = p.taxonomy == TaxonomyLabel::normal ? 1 : -1;
    ds.pairs.push_back(std::move(lp));
  }
  return ds;
}

std::vector<ParsedRecord> parse_all(const std::vector<RawRecord>& records) {
  std::vector<ParsedRecord> parsed;
  parsed.reserve(records.size());
  for (const auto& r : records) parsed.push_back(parse_record(r));
  return parsed;
}

Vocab vocab_from_parsed(const std::vector<ParsedRecord>& parsed, int min_freq) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& p : parsed) {
    if (p.input_toks.empty() || p.response_toks.empty()) continue;
    corpus.push_back(p.input_toks);
    corpus.push_back(p.response_toks);
  }
  return build_vocab(corpus, min_freq);
}

std::vector<RawRecord> read_jsonl_stream(std::istream& in,
                                         const std::string& name) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(name + ":" + std::to_string(lineno) +
                      ": malformed JSON record: " + e.what());
    }
    if (!j.is_object() || !j.contains("input") || !j.contains("response") ||
        !j.contains("label"))
      throw DataError(name + ":" + std::to_string(lineno) +
                      ": record must have input, response and label fields");
    try {
      records.push_back(RawRecord{j.at("input").get<std::string>(),
                                  j.at("response").get<std::string>(),
                                  j.at("label").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw DataError(name + ":" + std::to_string(lineno) +
                      ": fields must be strings: " + e.what());
    }
  }
  return records;
}

}  // namespace

std::vector<RawRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path);
  return read_jsonl_stream(in, path);
}

void write_jsonl(const std::string& path,
                 const std::vector<RawRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset file: " + path);
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["input"] = r.input;
    j["response"] = r.response;
    j["label"] = r.label;
    out << j.dump() << "\n";
  }
}

Dataset encode_records(const std::vector<RawRecord>& records, int min_freq) {
  auto parsed = parse_all(records);
  return encode_parsed(parsed, vocab_from_parsed(parsed, min_freq));
}

Dataset encode_records(const std::vector<RawRecord>& records,
                       const Vocab& vocab) {
  return encode_parsed(parse_all(records), vocab);
}

Dataset load_dataset(const std::string& path, int min_freq) {
  return encode_records(read_jsonl(path), min_freq);
}

Dataset load_dataset(const std::string& path, const Vocab& vocab) {
  return encode_records(read_jsonl(path), vocab);
}

std::vector<LabeledPair> build_subset(const std::vector<LabeledPair>& data,
                                      TaxonomyLabel category,
                                      std::uint64_t seed) {
  if (category == TaxonomyLabel::normal)
    throw ContractError("build_subset: category must not be normal");
  std::vector<LabeledPair> cat, normal;
  for (const auto& p : data) {
    if (p.taxonomy == category)
      cat.push_back(p);
    else if (p.taxonomy == TaxonomyLabel::normal)
      normal.push_back(p);
  }
  if (cat.empty())
    throw DataError("build_subset: no records of category " +
                    to_string(category));
  if (normal.size() < cat.size())
    throw DataError("build_subset: need " + std::to_string(cat.size()) +
                    " normal records but only " +
                    std::to_string(normal.size()) + " available");
  Rng rng = Rng(seed).substream("subset");
  rng.shuffle(normal);
  normal.resize(cat.size());
  std::vector<LabeledPair> out = std::move(cat);
  out.insert(out.end(), normal.begin(), normal.end());
  rng.shuffle(out);
  return out;
}

SplitDataset split(const std::vector<LabeledPair>& data, double ratio,
                   std::uint64_t seed) {
  if (data.size() < 2) throw ContractError("split: need at least 2 records");
  if (!(ratio > 0.0 && ratio < 1.0))
    throw ContractError("split: ratio must be in (0,1)");
  std::vector<LabeledPair> shuffled = data;
  Rng rng = Rng(seed).substream("split");
  rng.shuffle(shuffled);
  std::size_t cut = static_cast<std::size_t>(
      std::llround(ratio * static_cast<double>(shuffled.size())));
  cut = std::min(std::max<std::size_t>(cut, 1), shuffled.size() - 1);
  SplitDataset out;
  out.seed = seed;
  out.train.assign(shuffled.begin(), shuffled.begin() + cut);
  out.test.assign(shuffled.begin() + cut, shuffled.end());
  return out;
}

}  // namespace purechat::text
