#include "purechat/config.hpp"

#include <fstream>
#include <set>

namespace purechat {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ConfigError("config: unknown key \"" + key + "\" in " + where);
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  check_keys(j, {"seed", "min_freq", "censor", "chat", "purify"}, "top level");
  maybe(j, "seed", cfg.seed);
  maybe(j, "min_freq", cfg.min_freq);
  if (j.contains("censor")) {
    const auto& c = j.at("censor");
    check_keys(c, {"layers", "hidden", "embed", "lr", "epochs", "batch"},
               "censor");
    maybe(c, "layers", cfg.censor.layers);
    maybe(c, "hidden", cfg.censor.hidden);
    maybe(c, "embed", cfg.censor.embed);
    maybe(c, "lr", cfg.censor.lr);
    maybe(c, "epochs", cfg.censor.epochs);
    maybe(c, "batch", cfg.censor.batch);
  }
  if (j.contains("chat")) {
    const auto& c = j.at("chat");
    check_keys(c,
               {"layers", "hidden", "embed", "cell", "lr", "epochs", "batch",
                "k", "max_len"},
               "chat");
    maybe(c, "layers", cfg.chat.layers);
    maybe(c, "hidden", cfg.chat.hidden);
    maybe(c, "embed", cfg.chat.embed);
    if (c.contains("cell"))
      cfg.chat.cell = nn::cell_kind_from_string(c.at("cell").get<std::string>());
    maybe(c, "lr", cfg.chat.lr);
    maybe(c, "epochs", cfg.chat.epochs);
    maybe(c, "batch", cfg.chat.batch);
    maybe(c, "k", cfg.chat.k);
    maybe(c, "max_len", cfg.chat.max_len);
  }
  if (j.contains("purify")) {
    const auto& c = j.at("purify");
    check_keys(c,
               {"rounds", "k", "max_len", "lr", "mode", "fewshot_penalize",
                "sampling", "temperature", "bp_enabled"},
               "purify");
    maybe(c, "rounds", cfg.purify.rounds);
    maybe(c, "k", cfg.purify.k);
    maybe(c, "max_len", cfg.purify.max_len);
    maybe(c, "lr", cfg.purify.lr);
    if (c.contains("mode"))
      cfg.purify.mode = rl::mode_from_string(c.at("mode").get<std::string>());
    maybe(c, "fewshot_penalize", cfg.purify.fewshot_penalize);
    maybe(c, "sampling", cfg.purify.sampling);
    maybe(c, "temperature", cfg.purify.temperature);
    maybe(c, "bp_enabled", cfg.purify.bleu.bp_enabled);
  }
  validate(cfg);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": malformed config JSON: " + std::string(e.what()));
  }
  return run_config_from_json(j);
}

ordered_json to_json(const RunConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["min_freq"] = cfg.min_freq;
  ordered_json c;
  c["layers"] = cfg.censor.layers;
  c["hidden"] = cfg.censor.hidden;
  c["embed"] = cfg.censor.embed;
  c["lr"] = cfg.censor.lr;
  c["epochs"] = cfg.censor.epochs;
  c["batch"] = cfg.censor.batch;
  j["censor"] = c;
  ordered_json g;
  g["layers"] = cfg.chat.layers;
  g["hidden"] = cfg.chat.hidden;
  g["embed"] = cfg.chat.embed;
  g["cell"] = nn::to_string(cfg.chat.cell);
  g["lr"] = cfg.chat.lr;
  g["epochs"] = cfg.chat.epochs;
  g["batch"] = cfg.chat.batch;
  g["k"] = cfg.chat.k;
  g["max_len"] = cfg.chat.max_len;
  j["chat"] = g;
  ordered_json p;
  p["rounds"] = cfg.purify.rounds;
  p["k"] = cfg.purify.k;
  p["max_len"] = cfg.purify.max_len;
  p["lr"] = cfg.purify.lr;
  p["mode"] = rl::to_string(cfg.purify.mode);
  p["fewshot_penalize"] = cfg.purify.fewshot_penalize;
  p["sampling"] = cfg.purify.sampling;
  p["temperature"] = cfg.purify.temperature;
  p["bp_enabled"] = cfg.purify.bleu.bp_enabled;
  j["purify"] = p;
  return j;
}

void validate(const RunConfig& cfg) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw ConfigError(std::string("config: ") + what +
                                      " must be positive");
  };
  positive(cfg.censor.lr, "censor.lr");
  positive(cfg.chat.lr, "chat.lr");
  positive(cfg.purify.lr, "purify.lr");
  positive(cfg.purify.temperature, "purify.temperature");
  auto at_least = [](long v, long lo, const char* what) {
    if (v < lo)
      throw ConfigError(std::string("config: ") + what + " must be >= " +
                        std::to_string(lo));
  };
  at_least(cfg.min_freq, 1, "min_freq");
  at_least(cfg.censor.layers, 1, "censor.layers");
  at_least(cfg.censor.hidden, 1, "censor.hidden");
  at_least(cfg.censor.embed, 1, "censor.embed");
  at_least(cfg.censor.epochs, 0, "censor.epochs");
  at_least(cfg.censor.batch, 1, "censor.batch");
  at_least(cfg.chat.layers, 1, "chat.layers");
  at_least(cfg.chat.hidden, 1, "chat.hidden");
  at_least(cfg.chat.embed, 1, "chat.embed");
  at_least(cfg.chat.epochs, 0, "chat.epochs");
  at_least(cfg.chat.batch, 1, "chat.batch");
  at_least(cfg.chat.k, 1, "chat.k");
  at_least(cfg.chat.max_len, 1, "chat.max_len");
  at_least(cfg.purify.rounds, 0, "purify.rounds");
  at_least(cfg.purify.k, 1, "purify.k");
  at_least(cfg.purify.max_len, 1, "purify.max_len");
}

}  // namespace purechat
