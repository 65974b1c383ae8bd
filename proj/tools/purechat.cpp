#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "purechat/checkpoint.hpp"
#include "purechat/config.hpp"
#include "purechat/metrics.hpp"
#include "purechat/purify.hpp"
#include "purechat/synthetic.hpp"

namespace {

using namespace purechat;
namespace fs = std::filesystem;

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
}

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
};

RunConfig effective_config(const GlobalOpts& g) {
  RunConfig cfg =
      g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;  // flag overrides file
  cfg.purify.seed = cfg.seed;
  return cfg;
}

std::string history_csv(const std::vector<censor::EpochStats>& rows) {
  std::string csv = "epoch,train_loss,test_acc\n";
  for (const auto& r : rows)
    csv += std::to_string(r.epoch) + "," + fmt6(r.train_loss) + "," +
           fmt6(r.test_acc) + "\n";
  return csv;
}

std::string history_csv(const std::vector<chat::EpochStats>& rows) {
  std::string csv = "epoch,train_loss,perplexity\n";
  for (const auto& r : rows)
    csv += std::to_string(r.epoch) + "," + fmt6(r.train_loss) + "," +
           fmt6(r.perplexity) + "\n";
  return csv;
}

std::string report_csv(const rl::PurifyReport& report) {
  std::string csv =
      "round,offensive_rate,offensive_fraction,mean_reward,bleu,objective\n";
  for (const auto& r : report.rows)
    csv += std::to_string(r.round) + "," + fmt6(r.offensive_rate) + "," +
           fmt6(r.offensive_fraction) + "," + fmt6(r.mean_reward) + "," +
           fmt6(r.bleu) + "," + fmt6(r.objective) + "\n";
  return csv;
}

std::vector<int> encode_text(const text::Vocab& vocab, const std::string& raw,
                             const char* what) {
  auto toks = text::tokenize(text::clean(raw));
  if (toks.empty())
    throw DataError(std::string(what) + " is empty after cleaning");
  return vocab.encode(toks);
}

rl::PurifyInputs inputs_from_dataset(const text::Dataset& ds) {
  rl::PurifyInputs out;
  for (const auto& p : ds.pairs) {
    std::size_t idx = 0;
    bool found = false;
    for (; idx < out.inputs.size(); ++idx)
      if (out.inputs[idx] == p.input) {
        found = true;
        break;
      }
    if (!found) {
      out.inputs.push_back(p.input);
      out.refs.emplace_back();
    }
    auto& refs = out.refs[idx];
    if (std::find(refs.begin(), refs.end(), p.response) == refs.end())
      refs.push_back(p.response);
  }
  return out;
}

int cmd_train_censor(const GlobalOpts& g, const std::string& data_path,
                     const std::string& out_path, std::string history_path,
                     std::optional<int> epochs) {
  RunConfig cfg = effective_config(g);
  if (epochs) cfg.censor.epochs = *epochs;
  text::Dataset ds = text::load_dataset(data_path, cfg.min_freq);
  if (ds.dropped)
    std::cerr << "note: dropped " << ds.dropped
              << " records empty after cleaning\n";
  text::SplitDataset splits = text::split(ds.pairs, 0.70, cfg.seed);
  censor::TrainResult res =
      censor::train_censor(splits, cfg.censor, ds.vocab.size(), cfg.seed);

  nlohmann::ordered_json hist;
  hist["epochs"] = cfg.censor.epochs;
  hist["best_epoch"] = res.best_epoch;
  hist["best_test_acc"] =
      res.history.empty() ? 0.0 : res.history[res.best_epoch - 1].test_acc;
  save_censor_checkpoint(out_path, res.model, ds.vocab, hist);
  if (history_path.empty()) history_path = out_path + ".history.csv";
  write_file(history_path, history_csv(res.history));
  std::cout << "wrote " << out_path << " (best epoch " << res.best_epoch
            << ")\n";
  return 0;
}

int cmd_train_chat(const GlobalOpts& g, const std::string& data_path,
                   const std::string& out_path, std::string history_path,
                   std::optional<int> epochs) {
  RunConfig cfg = effective_config(g);
  if (epochs) cfg.chat.epochs = *epochs;
  text::Dataset ds = text::load_dataset(data_path, cfg.min_freq);
  std::vector<chat::Pair> pairs;
  for (const auto& p : ds.pairs) pairs.emplace_back(p.input, p.response);
  chat::TrainResult res =
      chat::train_chat(pairs, cfg.chat, ds.vocab.size(), cfg.seed);

  nlohmann::ordered_json hist;
  hist["epochs"] = cfg.chat.epochs;
  hist["final_train_loss"] =
      res.history.empty() ? 0.0 : res.history.back().train_loss;
  hist["final_perplexity"] =
      res.history.empty() ? 0.0 : res.history.back().perplexity;
  save_chat_checkpoint(out_path, res.model, ds.vocab, hist);
  if (history_path.empty()) history_path = out_path + ".history.csv";
  write_file(history_path, history_csv(res.history));
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_purify(const GlobalOpts& g, const std::string& chat_path,
               const std::string& censor_path, const std::string& inputs_path,
               std::optional<int> rounds, std::optional<std::string> mode,
               std::optional<bool> sampling,
               std::optional<bool> fewshot_penalize) {
  RunConfig cfg = effective_config(g);
  if (rounds) cfg.purify.rounds = *rounds;
  if (mode) cfg.purify.mode = rl::mode_from_string(*mode);
  if (sampling) cfg.purify.sampling = *sampling;
  if (fewshot_penalize) cfg.purify.fewshot_penalize = *fewshot_penalize;

  ChatCheckpoint chat_ckpt = load_chat_checkpoint(chat_path);
  CensorCheckpoint censor_ckpt = load_censor_checkpoint(censor_path);
  std::uint64_t h_chat = vocab_hash(chat_ckpt.vocab);
  std::uint64_t h_censor = vocab_hash(censor_ckpt.vocab);
  if (h_chat != h_censor) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "vocabulary mismatch: chat vocab hash %016llx vs censor "
                  "vocab hash %016llx",
                  static_cast<unsigned long long>(h_chat),
                  static_cast<unsigned long long>(h_censor));
    throw DataError(buf);
  }

  text::Dataset ds = text::load_dataset(inputs_path, chat_ckpt.vocab);
  rl::PurifyInputs inputs = inputs_from_dataset(ds);
  cfg.purify.k = cfg.chat.k;
  cfg.purify.max_len = cfg.chat.max_len;
  cfg.purify.seed = cfg.seed;

  rl::PurifyResult res =
      rl::purify(chat_ckpt.model, censor_ckpt.model, inputs, cfg.purify);

  fs::create_directories(g.out_dir);
  std::string ckpt_path = (fs::path(g.out_dir) / "purified.ckpt.json").string();
  std::string report_path = (fs::path(g.out_dir) / "report.csv").string();
  nlohmann::ordered_json hist;
  hist["purified_rounds"] = cfg.purify.rounds;
  hist["mode"] = rl::to_string(cfg.purify.mode);
  if (!res.report.rows.empty()) {
    hist["first_offensive_rate"] = res.report.rows.front().offensive_rate;
    hist["final_offensive_rate"] = res.report.rows.back().offensive_rate;
  }
  save_chat_checkpoint(ckpt_path, res.model, chat_ckpt.vocab, hist);
  write_file(report_path, report_csv(res.report));
  std::cout << "wrote " << ckpt_path << " and " << report_path << "\n";
  return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& censor_path,
             const std::string& data_path, const std::string& subset,
             const std::string& out_json, const std::string& per_class_csv) {
  RunConfig cfg = effective_config(g);
  CensorCheckpoint ckpt = load_censor_checkpoint(censor_path);
  text::Dataset ds = text::load_dataset(data_path, ckpt.vocab);
  std::vector<text::LabeledPair> pairs = ds.pairs;
  if (!subset.empty())
    pairs = text::build_subset(pairs, text::label_from_string(subset), cfg.seed);
  if (pairs.empty()) throw DataError("eval: no records to evaluate");

  std::vector<std::pair<std::string, std::string>> gp;
  for (const auto& p : pairs) {
    double s = censor::score(ckpt.model, p.input, p.response);
    gp.emplace_back(p.y > 0 ? "normal" : "offensive",
                    s > 0.0 ? "normal" : "offensive");
  }
  metrics::ClassificationReport rep =
      metrics::classification_report(gp, {"normal", "offensive"});

  nlohmann::ordered_json j;
  j["accuracy"] = rep.accuracy;
  j["precision"] = rep.precision;
  j["recall"] = rep.recall;
  j["f1"] = rep.f1;
  std::string dumped = j.dump(1) + "\n";
  std::cout << dumped;
  if (!out_json.empty()) write_file(out_json, dumped);
  if (!per_class_csv.empty()) {
    std::string csv = "label,tp,fp,fn,tn,precision,recall\n";
    for (const auto& c : rep.per_class)
      csv += c.label + "," + std::to_string(c.tp) + "," + std::to_string(c.fp) +
             "," + std::to_string(c.fn) + "," + std::to_string(c.tn) + "," +
             fmt6(c.precision) + "," + fmt6(c.recall) + "\n";
    write_file(per_class_csv, csv);
  }
  return 0;
}

int cmd_score(const GlobalOpts&, const std::string& censor_path,
              const std::string& input, const std::string& reply) {
  CensorCheckpoint ckpt = load_censor_checkpoint(censor_path);
  auto input_ids = encode_text(ckpt.vocab, input, "input");
  auto reply_ids = encode_text(ckpt.vocab, reply, "reply");
  std::printf("%.6f\n", censor::score(ckpt.model, input_ids, reply_ids));
  return 0;
}

int cmd_chat(const GlobalOpts& g, const std::string& chat_path,
             const std::string& censor_path) {
  RunConfig cfg = effective_config(g);
  ChatCheckpoint chat_ckpt = load_chat_checkpoint(chat_path);
  std::optional<CensorCheckpoint> censor_ckpt;
  if (!censor_path.empty()) {
    censor_ckpt = load_censor_checkpoint(censor_path);
    if (vocab_hash(censor_ckpt->vocab) != vocab_hash(chat_ckpt.vocab))
      throw DataError("vocabulary mismatch between chat and censor checkpoints");
  }
  const text::Vocab& vocab = chat_ckpt.vocab;
  std::string line;
  while (std::getline(std::cin, line)) {
    auto toks = text::tokenize(text::clean(line));
    if (toks.empty()) {
      std::cerr << "(input empty after cleaning)\n";
      continue;
    }
    auto ids = vocab.encode(toks);
    chat::GenResult gen = chat::generate_candidates(
        chat_ckpt.model, ids, cfg.chat.k, cfg.chat.max_len);
    if (gen.candidates.empty()) {
      std::cout << "[no safe reply]\n";
      continue;
    }
    if (censor_ckpt) {
      std::vector<std::vector<int>> replies;
      for (const auto& c : gen.candidates)
        replies.push_back(rl::candidate_reply_tokens(c.tokens));
      auto kept = censor::filter_candidates(censor_ckpt->model, ids, replies);
      if (kept.empty()) {
        std::cout << "[no safe reply]\n";
      } else {
        std::cout << vocab.decode_join(kept.front().reply) << "\n";
      }
    } else {
      std::cout << vocab.decode_join(
                       rl::candidate_reply_tokens(gen.candidates[0].tokens))
                << "\n";
    }
  }
  return 0;
}

int cmd_gen_synthetic(const GlobalOpts& g, const std::string& kind,
                      std::size_t n, double contamination,
                      double offensive_fraction, const std::string& out_path) {
  RunConfig cfg = effective_config(g);
  std::vector<text::RawRecord> records;
  if (kind == "separable") {
    records = synth::separable_corpus(n, offensive_fraction, cfg.seed);
  } else if (kind == "contextual") {
    records = synth::contextual_corpus(n, cfg.seed).train;
  } else if (kind == "chat") {
    records = synth::chat_corpus(n, contamination, cfg.seed);
  } else {
    throw ConfigError("gen-synthetic: kind must be separable, contextual or chat");
  }
  text::write_jsonl(out_path, records);
  std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "purechat: context-aware reply censorship and policy-gradient "
      "purification for chat models"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON run configuration file");
  std::uint64_t seed_val = 0;
  auto* seed_opt =
      app.add_option("--seed", seed_val, "run seed (overrides config file)");
  app.add_option("--out-dir", g.out_dir, "output directory for purify");

  auto* tc = app.add_subcommand("train-censor",
                                "train the censorship model on a dataset");
  std::string tc_data, tc_out = "censor.ckpt.json", tc_hist;
  std::optional<int> tc_epochs;
  tc->add_option("--data", tc_data, "JSON-lines dataset")->required();
  tc->add_option("--out", tc_out, "checkpoint path");
  tc->add_option("--history", tc_hist, "per-epoch CSV path");
  tc->add_option("--epochs", tc_epochs, "override epoch count");

  auto* tg = app.add_subcommand("train-chat",
                                "train the generation model on a dataset");
  std::string tg_data, tg_out = "chat.ckpt.json", tg_hist;
  std::optional<int> tg_epochs;
  tg->add_option("--data", tg_data, "JSON-lines dataset")->required();
  tg->add_option("--out", tg_out, "checkpoint path");
  tg->add_option("--history", tg_hist, "per-epoch CSV path");
  tg->add_option("--epochs", tg_epochs, "override epoch count");

  auto* pu = app.add_subcommand("purify",
                                "policy-gradient purification of a chat model");
  std::string pu_chat, pu_censor, pu_inputs;
  std::optional<int> pu_rounds;
  std::optional<std::string> pu_mode;
  std::optional<bool> pu_sampling, pu_penalize;
  pu->add_option("--chat", pu_chat, "chat checkpoint")->required();
  pu->add_option("--censor", pu_censor, "censor checkpoint")->required();
  pu->add_option("--inputs", pu_inputs, "JSON-lines dataset of inputs/references")
      ->required();
  pu->add_option("--rounds", pu_rounds, "override round count");
  pu->add_option("--mode", pu_mode, "standard or fewshot");
  pu->add_option("--sampling", pu_sampling, "sample candidates instead of beam");
  pu->add_option("--fewshot-penalize", pu_penalize,
                 "penalize offensive first candidates instead of masking");

  auto* ev = app.add_subcommand("eval", "classification metrics on a dataset");
  std::string ev_censor, ev_data, ev_subset, ev_out, ev_per_class;
  ev->add_option("--censor", ev_censor, "censor checkpoint")->required();
  ev->add_option("--data", ev_data, "JSON-lines dataset")->required();
  ev->add_option("--subset", ev_subset,
                 "evaluate the violent|dangerous|offensive subset");
  ev->add_option("--out", ev_out, "also write the metrics JSON here");
  ev->add_option("--per-class", ev_per_class, "write per-class counts CSV");

  auto* sc = app.add_subcommand("score", "score one (input, reply) pair");
  std::string sc_censor, sc_input, sc_reply;
  sc->add_option("--censor", sc_censor, "censor checkpoint")->required();
  sc->add_option("--input", sc_input, "input sentence")->required();
  sc->add_option("--reply", sc_reply, "reply sentence")->required();

  auto* ch = app.add_subcommand("chat", "interactive generation loop");
  std::string ch_chat, ch_censor;
  ch->add_option("--chat", ch_chat, "chat checkpoint")->required();
  ch->add_option("--censor", ch_censor, "optional censor checkpoint for filtering");

  auto* gs = app.add_subcommand("gen-synthetic", "write a synthetic corpus");
  std::string gs_kind, gs_out;
  std::size_t gs_n = 200;
  double gs_contamination = 0.2, gs_offensive = 0.5;
  gs->add_option("--kind", gs_kind, "separable | contextual | chat")->required();
  gs->add_option("--n", gs_n, "records (separable/contextual) or inputs (chat)");
  gs->add_option("--contamination", gs_contamination,
                 "offensive record share for kind=chat");
  gs->add_option("--offensive-fraction", gs_offensive,
                 "offensive record share for kind=separable");
  gs->add_option("--out", gs_out, "output JSON-lines path")->required();

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count()) g.seed = seed_val;

  try {
    if (app.got_subcommand(tc))
      return cmd_train_censor(g, tc_data, tc_out, tc_hist, tc_epochs);
    if (app.got_subcommand(tg))
      return cmd_train_chat(g, tg_data, tg_out, tg_hist, tg_epochs);
    if (app.got_subcommand(pu))
      return cmd_purify(g, pu_chat, pu_censor, pu_inputs, pu_rounds, pu_mode,
                        pu_sampling, pu_penalize);
    if (app.got_subcommand(ev))
      return cmd_eval(g, ev_censor, ev_data, ev_subset, ev_out, ev_per_class);
    if (app.got_subcommand(sc)) return cmd_score(g, sc_censor, sc_input, sc_reply);
    if (app.got_subcommand(ch)) return cmd_chat(g, ch_chat, ch_censor);
    if (app.got_subcommand(gs))
      return cmd_gen_synthetic(g, gs_kind, gs_n, gs_contamination, gs_offensive,
                               gs_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
