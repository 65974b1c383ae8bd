#include "purechat/checkpoint.hpp"

#include <fstream>
#include <map>

namespace purechat {

using nlohmann::ordered_json;

std::uint64_t vocab_hash(const text::Vocab& v) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& tok : v.id_to_token) {
    for (char c : tok) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h ^= 0x0a;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

ordered_json params_to_json(
    const std::function<void(const std::function<void(const std::string&,
                                                      const ad::Array&)>&)>&
        for_each) {
  ordered_json params = ordered_json::array();
  for_each([&](const std::string& name, const ad::Array& a) {
    ordered_json p;
    p["name"] = name;
    p["shape"] = a.shape();
    p["data"] = a.data();
    params.push_back(std::move(p));
  });
  return params;
}

void params_from_json(
    const ordered_json& params,
    const std::function<void(const std::function<void(const std::string&,
                                                      ad::Array&)>&)>& for_each,
    const std::string& path) {
  std::map<std::string, const ordered_json*> by_name;
  for (const auto& p : params)
    by_name[p.at("name").get<std::string>()] = &p;
  std::size_t used = 0;
  for_each([&](const std::string& name, ad::Array& a) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw DataError(path + ": checkpoint is missing parameter " + name);
    const ordered_json& p = *it->second;
    auto shape = p.at("shape").get<std::vector<std::size_t>>();
    auto data = p.at("data").get<std::vector<double>>();
    ad::Array loaded(shape, std::move(data));
    if (!loaded.same_shape(a))
      throw DataError(path + ": parameter " + name + " has shape " +
                      loaded.shape_string() + ", expected " + a.shape_string());
    a = std::move(loaded);
    ++used;
  });
  if (used != by_name.size())
    throw DataError(path + ": checkpoint has " +
                    std::to_string(by_name.size()) +
                    " parameters, model expects " + std::to_string(used));
}

text::Vocab vocab_from_json(const ordered_json& j) {
  text::Vocab v;
  v.id_to_token = j.at("tokens").get<std::vector<std::string>>();
  v.min_freq = j.at("min_freq").get<int>();
  if (v.id_to_token.size() < 4)
    throw DataError("checkpoint vocab is missing the reserved tokens");
  for (std::size_t i = 0; i < v.id_to_token.size(); ++i)
    v.token_to_id[v.id_to_token[i]] = static_cast<int>(i);
  return v;
}

ordered_json vocab_to_json(const text::Vocab& v) {
  ordered_json j;
  j["min_freq"] = v.min_freq;
  j["tokens"] = v.id_to_token;
  return j;
}

ordered_json load_and_check(const std::string& path, const char* kind) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed checkpoint JSON: " + e.what());
  }
  int version = j.at("format_version").get<int>();
  if (version != kCheckpointVersion)
    throw DataError(path + ": unsupported format_version " +
                    std::to_string(version) + " (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  auto k = j.at("model_kind").get<std::string>();
  if (k != kind)
    throw DataError(path + ": model_kind is \"" + k + "\", expected \"" +
                    kind + "\"");
  return j;
}

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out << j.dump(1) << "\n";
}

}  // namespace

void save_censor_checkpoint(const std::string& path,
                            const censor::CensorModel& model,
                            const text::Vocab& vocab,
                            const ordered_json& history) {
  ordered_json j;
  j["format_version"] = kCheckpointVersion;
  j["model_kind"] = "censor";
  ordered_json cfg;
  cfg["layers"] = model.cfg.layers;
  cfg["hidden"] = model.cfg.hidden;
  cfg["embed"] = model.cfg.embed;
  cfg["lr"] = model.cfg.lr;
  cfg["epochs"] = model.cfg.epochs;
  cfg["batch"] = model.cfg.batch;
  j["config"] = cfg;
  j["vocab"] = vocab_to_json(vocab);
  j["history"] = history;
  j["params"] = params_to_json([&](auto f) { model.for_each_param(f); });
  write_json(path, j);
}

CensorCheckpoint load_censor_checkpoint(const std::string& path) {
  ordered_json j = load_and_check(path, "censor");
  CensorCheckpoint out;
  out.vocab = vocab_from_json(j.at("vocab"));
  censor::CensorConfig cfg;
  const auto& c = j.at("config");
  cfg.layers = c.at("layers").get<int>();
  cfg.hidden = c.at("hidden").get<int>();
  cfg.embed = c.at("embed").get<int>();
  cfg.lr = c.at("lr").get<double>();
  cfg.epochs = c.at("epochs").get<int>();
  cfg.batch = c.at("batch").get<int>();
  Rng rng(0);
  out.model = censor::CensorModel::init(cfg, out.vocab.size(), rng);
  params_from_json(j.at("params"), [&](auto f) { out.model.for_each_param(f); },
                   path);
  out.history = j.at("history");
  return out;
}

void save_chat_checkpoint(const std::string& path, const chat::ChatModel& model,
                          const text::Vocab& vocab,
                          const ordered_json& history) {
  ordered_json j;
  j["format_version"] = kCheckpointVersion;
  j["model_kind"] = "chat";
  ordered_json cfg;
  cfg["layers"] = model.cfg.layers;
  cfg["hidden"] = model.cfg.hidden;
  cfg["embed"] = model.cfg.embed;
  cfg["cell"] = nn::to_string(model.cfg.cell);
  cfg["lr"] = model.cfg.lr;
  cfg["epochs"] = model.cfg.epochs;
  cfg["batch"] = model.cfg.batch;
  cfg["k"] = model.cfg.k;
  cfg["max_len"] = model.cfg.max_len;
  j["config"] = cfg;
  j["vocab"] = vocab_to_json(vocab);
  j["history"] = history;
  j["params"] = params_to_json([&](auto f) { model.for_each_param(f); });
  write_json(path, j);
}

ChatCheckpoint load_chat_checkpoint(const std::string& path) {
  ordered_json j = load_and_check(path, "chat");
  ChatCheckpoint out;
  out.vocab = vocab_from_json(j.at("vocab"));
  chat::ChatConfig cfg;
  const auto& c = j.at("config");
  cfg.layers = c.at("layers").get<int>();
  cfg.hidden = c.at("hidden").get<int>();
  cfg.embed = c.at("embed").get<int>();
  cfg.cell = nn::cell_kind_from_string(c.at("cell").get<std::string>());
  cfg.lr = c.at("lr").get<double>();
  cfg.epochs = c.at("epochs").get<int>();
  cfg.batch = c.at("batch").get<int>();
  cfg.k = c.at("k").get<int>();
  cfg.max_len = c.at("max_len").get<int>();
  Rng rng(0);
  out.model = chat::ChatModel::init(cfg, out.vocab.size(), rng);
  params_from_json(j.at("params"), [&](auto f) { out.model.for_each_param(f); },
                   path);
  out.history = j.at("history");
  return out;
}

}  // namespace purechat
