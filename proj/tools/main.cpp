// Command-line driver. Exit codes: 0 success, 1 usage/config error,
// 2 data error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "relclass/checkpoint.hpp"
#include "relclass/config.hpp"
#include "relclass/data_io.hpp"
#include "relclass/errors.hpp"
#include "relclass/evaluation.hpp"
#include "relclass/model.hpp"
#include "relclass/sdp.hpp"
#include "relclass/training.hpp"

namespace {

using namespace relclass;
using nlohmann::json;

void require_file(const std::string& path, const char* what) {
  if (path.empty()) {
    throw ConfigError(std::string(what) + " path is not set");
  }
  if (!std::filesystem::exists(path)) {
    throw ConfigError(std::string(what) + " path does not exist: " + path);
  }
}

// Overrides shared by the config-driven commands; flag > file > default.
struct ConfigOverrides {
  std::string config_path;
  std::optional<std::string> train, dev, test, embeddings, checkpoint, task;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_epochs, patience, window;

  void add_flags(CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("-c,--config", config_path,
                                "Run config JSON file");
    if (config_required) opt->required();
    cmd->add_option("--train", train, "Override paths.train");
    cmd->add_option("--dev", dev, "Override paths.dev");
    cmd->add_option("--test", test, "Override paths.test");
    cmd->add_option("--embeddings", embeddings, "Override paths.embeddings");
    cmd->add_option("--checkpoint", checkpoint, "Override paths.checkpoint");
    cmd->add_option("--task", task, "Override task (semeval | bb3)");
    cmd->add_option("--seed", seed, "Override seed");
    cmd->add_option("--max-epochs", max_epochs, "Override max_epochs");
    cmd->add_option("--patience", patience, "Override patience");
    cmd->add_option("--window", window, "Override window");
  }

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig::defaults()
                                        : RunConfig::load(config_path);
    if (train) cfg.paths.train = *train;
    if (dev) cfg.paths.dev = *dev;
    if (test) cfg.paths.test = *test;
    if (embeddings) cfg.paths.embeddings = *embeddings;
    if (checkpoint) cfg.paths.checkpoint = *checkpoint;
    if (task) cfg.task = *task;
    if (seed) cfg.seed = *seed;
    if (max_epochs) cfg.hp.max_epochs = *max_epochs;
    if (patience) cfg.hp.patience = *patience;
    if (window) cfg.window = *window;
    cfg.validate();
    return cfg;
  }
};

LookupTable pre_table_for(const RunConfig& cfg) {
  if (!cfg.channels.pre) {
    LookupTable t = make_table("pre", cfg.hp.n_pre);
    t.lowercase = true;
    t.table.frozen = true;
    return t;
  }
  require_file(cfg.paths.embeddings, "embeddings");
  return load_embeddings(cfg.paths.embeddings, cfg.hp.n_pre);
}

void check_labels_known(const LabelSchema& schema,
                        const std::vector<RelationInstance>& insts) {
  for (const RelationInstance& inst : insts) {
    if (!schema.contains(inst.label)) {
      throw DataError("instance '" + inst.id + "': label '" + inst.label +
                      "' is not a " + schema.task + " label");
    }
  }
}

ModelParams train_model(const RunConfig& cfg, std::ostream* log,
                        TrainResult* result_out, double* train_acc_out) {
  require_file(cfg.paths.train, "train");
  const std::vector<RelationInstance> train_set =
      parse_corpus_jsonl_file(cfg.paths.train);
  if (train_set.empty()) throw DataError("train corpus is empty");
  std::vector<RelationInstance> dev_set;
  if (!cfg.paths.dev.empty()) {
    require_file(cfg.paths.dev, "dev");
    dev_set = parse_corpus_jsonl_file(cfg.paths.dev);
  }
  const LabelSchema schema = LabelSchema::for_task(cfg.task);
  check_labels_known(schema, train_set);
  check_labels_known(schema, dev_set);

  std::vector<const Token*> toks;
  for (const RelationInstance& inst : train_set) {
    for (const Token& t : inst.tokens) toks.push_back(&t);
  }
  VocabConfig vc;
  vc.n_ran = cfg.hp.n_ran;
  vc.n_char = cfg.hp.n_char;
  vc.n_pos = cfg.hp.n_pos;
  vc.n_wnh = cfg.hp.n_wnh;
  vc.char_lowercase = cfg.char_lowercase;
  BuiltVocabs vocabs = build_vocab(toks, vc);

  ModelParams model =
      build_model(cfg, pre_table_for(cfg), std::move(vocabs));
  Rng rng(cfg.seed);
  init_params(model, rng);
  TrainResult res = train(model, train_set, dev_set, rng, log);

  int correct = 0;
  for (const RelationInstance& inst : train_set) {
    if (predict(model, inst).label == inst.label) ++correct;
  }
  if (train_acc_out) {
    *train_acc_out = static_cast<double>(correct) / train_set.size();
  }
  if (result_out) *result_out = std::move(res);
  return model;
}

int cmd_train(const ConfigOverrides& ov, const std::string& log_path) {
  const RunConfig cfg = ov.resolve();
  if (cfg.paths.checkpoint.empty()) {
    throw ConfigError("checkpoint path is not set");
  }
  std::ofstream log_file;
  std::ostream* log = &std::cout;
  if (!log_path.empty()) {
    log_file.open(log_path, std::ios::binary);
    if (!log_file) throw ConfigError("cannot write log file: " + log_path);
    log = &log_file;
  }
  TrainResult res;
  double train_acc = 0;
  ModelParams model = train_model(cfg, log, &res, &train_acc);
  save_checkpoint(cfg.paths.checkpoint, model, cfg);

  json summary{{"checkpoint", cfg.paths.checkpoint},
               {"epochs_run", res.epochs_run},
               {"final_train_accuracy", train_acc}};
  if (res.best_epoch > 0) {
    summary["best_epoch"] = res.best_epoch;
    summary["best_dev_metric"] = res.best_metric;
  }
  std::cout << summary.dump() << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& report_path) {
  require_file(ckpt_path, "checkpoint");
  require_file(data_path, "data");
  Checkpoint ck = load_checkpoint(ckpt_path);
  const std::vector<RelationInstance> insts =
      parse_corpus_jsonl_file(data_path);
  if (insts.empty()) throw DataError("evaluation set is empty");
  check_labels_known(ck.model.schema, insts);

  std::vector<std::string> gold, pred;
  gold.reserve(insts.size());
  pred.reserve(insts.size());
  for (const RelationInstance& inst : insts) {
    gold.push_back(inst.label);
    pred.push_back(predict(ck.model, inst).label);
  }
  const EvalReport rep = evaluate(ck.model.schema, gold, pred);
  std::cout << rep.to_table();
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write report file: " + report_path);
    out << rep.to_json().dump(2) << "\n";
  }
  return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& in_path,
                const std::string& out_path) {
  require_file(ckpt_path, "checkpoint");
  require_file(in_path, "input");
  Checkpoint ck = load_checkpoint(ckpt_path);
  const std::vector<RelationInstance> insts =
      parse_corpus_jsonl_file(in_path);

  std::ofstream out_file;
  std::ostream* out = &std::cout;
  if (!out_path.empty()) {
    out_file.open(out_path, std::ios::binary);
    if (!out_file) throw ConfigError("cannot write output file: " + out_path);
    out = &out_file;
  }
  for (const RelationInstance& inst : insts) {
    const Prediction p = predict(ck.model, inst);
    json probs = json::array();
    for (int i = 0; i < p.probs.dim(); ++i) probs.push_back(p.probs[i]);
    *out << json{{"id", inst.id}, {"label", p.label}, {"probs", probs}}.dump()
         << "\n";
  }
  return 0;
}

int cmd_gradcheck(const ConfigOverrides& ov, int max_instances, int samples,
                  double tol) {
  const RunConfig cfg = ov.resolve();
  require_file(cfg.paths.train, "train");
  std::vector<RelationInstance> insts = parse_corpus_jsonl_file(cfg.paths.train);
  if (insts.empty()) throw DataError("gradcheck corpus is empty");
  if (static_cast<int>(insts.size()) > max_instances) {
    insts.resize(static_cast<std::size_t>(max_instances));
  }
  const LabelSchema schema = LabelSchema::for_task(cfg.task);
  check_labels_known(schema, insts);

  std::vector<const Token*> toks;
  for (const RelationInstance& inst : insts) {
    for (const Token& t : inst.tokens) toks.push_back(&t);
  }
  VocabConfig vc;
  vc.n_ran = cfg.hp.n_ran;
  vc.n_char = cfg.hp.n_char;
  vc.n_pos = cfg.hp.n_pos;
  vc.n_wnh = cfg.hp.n_wnh;
  vc.char_lowercase = cfg.char_lowercase;
  ModelParams model =
      build_model(cfg, pre_table_for(cfg), build_vocab(toks, vc));
  Rng rng(cfg.seed);
  init_params(model, rng);

  const GradCheckResult res = gradcheck(model, insts, rng, samples);
  for (const BlockReport& b : res.blocks) {
    if (b.skipped) {
      std::cout << "block " << b.name << " skipped (frozen)\n";
    } else {
      std::cout << "block " << b.name << " checked " << b.checked
                << " max_rel_err " << b.max_rel_err << "\n";
    }
  }
  std::cout << "max_rel_err " << res.max_rel_err << " tolerance " << tol
            << (res.pass(tol) ? " PASS" : " FAIL") << "\n";
  if (!res.pass(tol)) {
    throw NumericError("gradient check failed: max relative error " +
                       std::to_string(res.max_rel_err));
  }
  return 0;
}

int cmd_analyze_sdp(const std::string& conllu_path,
                    const std::string& spans_path,
                    const std::string& json_path) {
  require_file(conllu_path, "conllu");
  require_file(spans_path, "spans");
  std::vector<DepSentence> sents = parse_conllu_file(conllu_path);
  attach_spans(sents, spans_path);
  for (const DepSentence& s : sents) {
    if (s.has_spans) validate_tree(s);
  }
  const OverlapStats st = overlap_stats(sents);
  const json j{{"middle_count", st.middle_count},
               {"sdp_count", st.sdp_count},
               {"both_count", st.both_count},
               {"proportion", st.proportion()},
               {"sentences", st.sentences},
               {"skipped", st.skipped}};
  std::cout << j.dump() << "\n";
  if (!json_path.empty()) {
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw ConfigError("cannot write report file: " + json_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_convert_semeval(const std::string& in_path, const std::string& out_path,
                        const std::string& dev_out, int dev_size,
                        std::uint64_t seed) {
  require_file(in_path, "input");
  const std::vector<RelationInstance> insts = parse_semeval_file(in_path);
  if (!dev_out.empty()) {
    const auto [train_part, dev_part] = split_dev(insts, dev_size, seed);
    write_corpus_jsonl_file(out_path, train_part);
    write_corpus_jsonl_file(dev_out, dev_part);
    std::cout << json{{"instances", insts.size()},
                      {"train", train_part.size()},
                      {"dev", dev_part.size()}}
                     .dump()
              << "\n";
  } else {
    write_corpus_jsonl_file(out_path, insts);
    std::cout << json{{"instances", insts.size()}}.dump() << "\n";
  }
  return 0;
}

int cmd_gen_bb3_pairs(const std::string& in_path, const std::string& out_path,
                      int window) {
  require_file(in_path, "input");
  if (window < 1) throw ConfigError("window must be >= 1");
  const std::vector<Bb3Document> docs = parse_bb3_jsonl_file(in_path);
  Bb3Stats stats;
  const std::vector<RelationInstance> pairs =
      generate_bb3_pairs(docs, window, &stats);
  write_corpus_jsonl_file(out_path, pairs);
  std::cout << json{{"pairs", pairs.size()},
                    {"positives", stats.positives},
                    {"negatives", stats.negatives},
                    {"positive_rate", stats.positive_rate()},
                    {"skipped_overlap", stats.skipped_overlap}}
                   .dump()
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bi-LSTM relation classifier over five-part sequence context"};
  app.require_subcommand(1);

  ConfigOverrides train_ov;
  std::string train_log;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model");
  train_ov.add_flags(train_cmd, /*config_required=*/true);
  train_cmd->add_option("--log", train_log, "Per-epoch JSONL log file");

  std::string eval_ckpt, eval_data, eval_report;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "JSONL dataset")->required();
  eval_cmd->add_option("--report", eval_report, "Structured report JSON file");

  std::string pred_ckpt, pred_in, pred_out;
  CLI::App* pred_cmd = app.add_subcommand("predict", "Label instances");
  pred_cmd->add_option("--checkpoint", pred_ckpt, "Checkpoint file")->required();
  pred_cmd->add_option("--in", pred_in, "JSONL input")->required();
  pred_cmd->add_option("--out", pred_out, "JSONL output (default stdout)");

  ConfigOverrides gc_ov;
  int gc_instances = 2, gc_samples = 20;
  double gc_tol = 1e-4;
  CLI::App* gc_cmd =
      app.add_subcommand("gradcheck", "Finite-difference gradient check");
  gc_ov.add_flags(gc_cmd, /*config_required=*/true);
  gc_cmd->add_option("--instances", gc_instances, "Instances to check");
  gc_cmd->add_option("--samples", gc_samples, "Coordinates per block");
  gc_cmd->add_option("--tol", gc_tol, "Relative-error tolerance");

  std::string sdp_conllu, sdp_spans, sdp_json;
  CLI::App* sdp_cmd =
      app.add_subcommand("analyze-sdp", "Middle-context / SDP overlap stats");
  sdp_cmd->add_option("--conllu", sdp_conllu, "CoNLL-U parses")->required();
  sdp_cmd->add_option("--spans", sdp_spans, "Entity-span JSONL sidecar")
      ->required();
  sdp_cmd->add_option("--json", sdp_json, "Structured report JSON file");

  std::string cs_in, cs_out, cs_dev;
  int cs_dev_size = 800;
  std::uint64_t cs_seed = 42;
  CLI::App* cs_cmd = app.add_subcommand(
      "convert-semeval", "Official SemEval file to internal JSONL");
  cs_cmd->add_option("--in", cs_in, "Official-format input")->required();
  cs_cmd->add_option("--out", cs_out, "JSONL output")->required();
  cs_cmd->add_option("--dev-out", cs_dev, "Also split a dev set to this file");
  cs_cmd->add_option("--dev-size", cs_dev_size, "Dev split size");
  cs_cmd->add_option("--seed", cs_seed, "Dev split shuffle seed");

  std::string bb_in, bb_out;
  int bb_window = 1;
  CLI::App* bb_cmd = app.add_subcommand(
      "gen-bb3-pairs", "Candidate pairs from BB3-style documents");
  bb_cmd->add_option("--in", bb_in, "Document JSONL input")->required();
  bb_cmd->add_option("--out", bb_out, "Instance JSONL output")->required();
  bb_cmd->add_option("--window", bb_window, "Sentence window (1 or 2)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(train_ov, train_log);
    if (*eval_cmd) return cmd_eval(eval_ckpt, eval_data, eval_report);
    if (*pred_cmd) return cmd_predict(pred_ckpt, pred_in, pred_out);
    if (*gc_cmd) return cmd_gradcheck(gc_ov, gc_instances, gc_samples, gc_tol);
    if (*sdp_cmd) return cmd_analyze_sdp(sdp_conllu, sdp_spans, sdp_json);
    if (*cs_cmd) {
      return cmd_convert_semeval(cs_in, cs_out, cs_dev, cs_dev_size, cs_seed);
    }
    if (*bb_cmd) return cmd_gen_bb3_pairs(bb_in, bb_out, bb_window);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
