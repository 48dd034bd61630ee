#include "relclass/config.hpp"

#include <fstream>

#include "relclass/errors.hpp"

namespace relclass {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  check_keys(j,
             {"task", "seed", "window", "paths", "hyperparams", "channels",
              "contexts", "char_lowercase"},
             "config");
  read(j, "task", c.task, "config");
  read(j, "seed", c.seed, "config");
  read(j, "window", c.window, "config");
  read(j, "char_lowercase", c.char_lowercase, "config");
  if (j.contains("paths")) {
    const json& p = j.at("paths");
    check_keys(p, {"train", "dev", "test", "embeddings", "checkpoint"},
               "config.paths");
    read(p, "train", c.paths.train, "config.paths");
    read(p, "dev", c.paths.dev, "config.paths");
    read(p, "test", c.paths.test, "config.paths");
    read(p, "embeddings", c.paths.embeddings, "config.paths");
    read(p, "checkpoint", c.paths.checkpoint, "config.paths");
  }
  if (j.contains("hyperparams")) {
    const json& h = j.at("hyperparams");
    check_keys(h,
               {"n_pre", "n_ran", "n_char", "n_pos", "n_wnh", "n_lstm", "n_h",
                "alpha", "beta", "epsilon", "init_lo", "init_hi", "max_epochs",
                "patience"},
               "config.hyperparams");
    read(h, "n_pre", c.hp.n_pre, "config.hyperparams");
    read(h, "n_ran", c.hp.n_ran, "config.hyperparams");
    read(h, "n_char", c.hp.n_char, "config.hyperparams");
    read(h, "n_pos", c.hp.n_pos, "config.hyperparams");
    read(h, "n_wnh", c.hp.n_wnh, "config.hyperparams");
    read(h, "n_lstm", c.hp.n_lstm, "config.hyperparams");
    read(h, "n_h", c.hp.n_h, "config.hyperparams");
    read(h, "alpha", c.hp.alpha, "config.hyperparams");
    read(h, "beta", c.hp.beta, "config.hyperparams");
    read(h, "epsilon", c.hp.epsilon, "config.hyperparams");
    read(h, "init_lo", c.hp.init_lo, "config.hyperparams");
    read(h, "init_hi", c.hp.init_hi, "config.hyperparams");
    read(h, "max_epochs", c.hp.max_epochs, "config.hyperparams");
    read(h, "patience", c.hp.patience, "config.hyperparams");
  }
  if (j.contains("channels")) {
    const json& f = j.at("channels");
    check_keys(f, {"pre", "ran", "char", "pos", "wnh"}, "config.channels");
    read(f, "pre", c.channels.pre, "config.channels");
    read(f, "ran", c.channels.ran, "config.channels");
    read(f, "char", c.channels.chr, "config.channels");
    read(f, "pos", c.channels.pos, "config.channels");
    read(f, "wnh", c.channels.wnh, "config.channels");
  }
  if (j.contains("contexts")) {
    const json& f = j.at("contexts");
    check_keys(f, {"before", "middle", "after"}, "config.contexts");
    read(f, "before", c.contexts.before, "config.contexts");
    read(f, "middle", c.contexts.middle, "config.contexts");
    read(f, "after", c.contexts.after, "config.contexts");
  }
  c.validate();
  return c;
}

nlohmann::json RunConfig::to_json() const {
  return json{
      {"task", task},
      {"seed", seed},
      {"window", window},
      {"char_lowercase", char_lowercase},
      {"paths",
       {{"train", paths.train},
        {"dev", paths.dev},
        {"test", paths.test},
        {"embeddings", paths.embeddings},
        {"checkpoint", paths.checkpoint}}},
      {"hyperparams",
       {{"n_pre", hp.n_pre},
        {"n_ran", hp.n_ran},
        {"n_char", hp.n_char},
        {"n_pos", hp.n_pos},
        {"n_wnh", hp.n_wnh},
        {"n_lstm", hp.n_lstm},
        {"n_h", hp.n_h},
        {"alpha", hp.alpha},
        {"beta", hp.beta},
        {"epsilon", hp.epsilon},
        {"init_lo", hp.init_lo},
        {"init_hi", hp.init_hi},
        {"max_epochs", hp.max_epochs},
        {"patience", hp.patience}}},
      {"channels",
       {{"pre", channels.pre},
        {"ran", channels.ran},
        {"char", channels.chr},
        {"pos", channels.pos},
        {"wnh", channels.wnh}}},
      {"contexts",
       {{"before", contexts.before},
        {"middle", contexts.middle},
        {"after", contexts.after}}},
  };
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  return from_json(j);
}

void RunConfig::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << to_json().dump(2) << "\n";
}

void RunConfig::validate() const {
  if (task != "semeval" && task != "bb3") {
    throw ConfigError("task must be 'semeval' or 'bb3', got '" + task + "'");
  }
  if (window < 1) throw ConfigError("window must be >= 1");
  auto pos = [](int v, const char* name) {
    if (v <= 0) {
      throw ConfigError(std::string(name) + " must be positive, got " +
                        std::to_string(v));
    }
  };
  pos(hp.n_pre, "n_pre");
  pos(hp.n_ran, "n_ran");
  pos(hp.n_char, "n_char");
  pos(hp.n_pos, "n_pos");
  pos(hp.n_wnh, "n_wnh");
  pos(hp.n_lstm, "n_lstm");
  pos(hp.n_h, "n_h");
  pos(hp.max_epochs, "max_epochs");
  if (hp.n_char % 2 != 0) {
    throw ConfigError("n_char must be even (split across two directions), got " +
                      std::to_string(hp.n_char));
  }
  if (hp.patience < 0) throw ConfigError("patience must be >= 0");
  if (!(hp.alpha > 0)) throw ConfigError("alpha must be > 0");
  if (hp.beta < 0) throw ConfigError("beta must be >= 0");
  if (hp.epsilon < 0) throw ConfigError("epsilon must be >= 0");
  if (!(hp.init_lo < hp.init_hi)) {
    throw ConfigError("init range is empty: [" + std::to_string(hp.init_lo) +
                      ", " + std::to_string(hp.init_hi) + ")");
  }
  if (!channels.any()) throw ConfigError("at least one feature channel must be enabled");
}

}  // namespace relclass
