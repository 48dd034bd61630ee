// Acceptance gate: each check prints exactly one PASS/FAIL line; the exit
// code is the number of failed checks. Heavier quantitative checks (overfit,
// determinism) run the real CLI binary or the real training loop.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "relclass/checkpoint.hpp"
#include "relclass/config.hpp"
#include "relclass/data_io.hpp"
#include "relclass/encoder.hpp"
#include "relclass/evaluation.hpp"
#include "relclass/model.hpp"
#include "relclass/relation_head.hpp"
#include "relclass/rng.hpp"
#include "relclass/sdp.hpp"
#include "relclass/training.hpp"

using namespace relclass;

namespace {

const std::string kFix = FIXTURE_DIR;
const std::string kBin = RELCLASS_BIN;

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << "  " << name;
  if (!detail.empty()) std::cout << "  [" << detail << "]";
  std::cout << std::endl;
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = kBin + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// Toy model over the fixture corpus, dims from the fixture config.
struct Built {
  RunConfig cfg;
  std::vector<RelationInstance> insts;
  ModelParams model;
};

Built build_toy(int max_epochs) {
  Built b;
  b.cfg = RunConfig::load(kFix + "/toy_config.json");
  b.cfg.hp.max_epochs = max_epochs;
  b.cfg.hp.patience = max_epochs;
  b.insts = parse_corpus_jsonl_file(kFix + "/toy_train.jsonl");
  std::vector<const Token*> toks;
  for (const auto& inst : b.insts)
    for (const Token& t : inst.tokens) toks.push_back(&t);
  VocabConfig vc{b.cfg.hp.n_ran, b.cfg.hp.n_char, b.cfg.hp.n_pos,
                 b.cfg.hp.n_wnh, b.cfg.char_lowercase};
  LookupTable pre =
      load_embeddings(kFix + "/mini_embeddings.txt", b.cfg.hp.n_pre);
  b.model = build_model(b.cfg, std::move(pre), build_vocab(toks, vc));
  return b;
}

// ---- criterion 1: gradient fidelity ---------------------------------------

void check_gradient_fidelity() {
  const auto t0 = std::chrono::steady_clock::now();

  RunConfig cfg;
  cfg.hp.n_pre = 4;
  cfg.hp.n_ran = 4;
  cfg.hp.n_char = 4;
  cfg.hp.n_pos = 3;
  cfg.hp.n_wnh = 3;
  cfg.hp.n_lstm = 5;
  cfg.hp.n_h = 4;  // every dimension <= 8

  auto mk_inst = [](const std::string& id, const std::string& mid,
                    const std::string& label) {
    RelationInstance inst;
    inst.id = id;
    for (const std::string& w : {std::string("the"), std::string("alpha"), mid,
                                 std::string("box"), std::string(".")}) {
      inst.tokens.push_back(Token{w, "N", "_"});
    }
    inst.spans = EntitySpans{1, 1, 3, 3};
    inst.label = label;
    return inst;
  };
  const std::vector<RelationInstance> insts{mk_inst("g0", "causes", "R0"),
                                            mk_inst("g1", "near", "R1")};

  std::vector<const Token*> toks;
  for (const auto& inst : insts)
    for (const Token& t : inst.tokens) toks.push_back(&t);
  VocabConfig vc{4, 4, 3, 3, false};
  LookupTable pre = make_table("pre", 4);
  pre.table.frozen = true;
  pre.lowercase = true;
  ModelParams model = build_model(cfg, std::move(pre), build_vocab(toks, vc));

  // Three relations exactly.
  model.schema = LabelSchema{"custom", {"R0", "R1", "R2"}};
  model.out = make_output_params("w2", 3, model.penultimate_dim());

  Rng rng(17);
  init_params(model, rng);

  const GradCheckResult healthy = gradcheck(model, insts, rng, 20, 1e-4);

  detail::tanh_backward_scale = 1.05;
  const GradCheckResult mutated = gradcheck(model, insts, rng, 20, 1e-4);
  detail::tanh_backward_scale = 1.0;

  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "max_rel_err " << healthy.max_rel_err << ", mutated "
    << mutated.max_rel_err << ", " << secs << "s";
  report("gradient-fidelity",
         healthy.pass(1e-4) && !mutated.pass(1e-4) &&
             mutated.max_rel_err > 1e-2 && secs < 30.0,
         d.str());
}

// ---- criterion 2: overfit --------------------------------------------------

void check_overfit() {
  const auto t0 = std::chrono::steady_clock::now();
  Built b = build_toy(/*max_epochs=*/200);
  Rng rng(b.cfg.seed);
  init_params(b.model, rng);
  const TrainResult res = train(b.model, b.insts, {}, rng, nullptr);

  int correct = 0;
  for (const auto& inst : b.insts) {
    if (predict(b.model, inst).label == inst.label) ++correct;
  }
  const double acc = static_cast<double>(correct) / b.insts.size();
  const double loss = res.log.back().mean_loss;
  const double secs = seconds_since(t0);

  std::ostringstream d;
  d << "20 instances, " << res.epochs_run << " epochs, accuracy " << acc
    << ", mean loss " << loss << ", " << secs << "s";
  report("overfit",
         res.epochs_run <= 200 && acc >= 0.95 && loss < 0.1 && secs < 120.0,
         d.str());
}

// ---- criterion 3: pooling oracle -------------------------------------------

void check_pooling_oracle() {
  Rng rng(19);
  bool ok = true;
  std::string why;

  for (int iter = 0; iter < 1000 && ok; ++iter) {
    const int k = static_cast<int>(rng.below(7));      // 0..6 vectors
    const int nh = 1 + static_cast<int>(rng.below(5)); // dim 1..5
    std::vector<Vec> part(static_cast<std::size_t>(k), Vec(nh));
    for (Vec& v : part)
      for (double& x : v.span()) x = rng.uniform(-3, 3);

    Tape tape;
    std::vector<Value> vals;
    for (const Vec& v : part) vals.push_back(tape.input(v));
    const Vec got = pool(tape, vals, nh).val();

    // Naive reference, computed independently.
    Vec expect(4 * nh);
    if (k > 0) {
      for (int j = 0; j < nh; ++j) {
        double mx = part[0][j], mn = part[0][j], sum = 0, sq = 0;
        for (const Vec& v : part) {
          mx = std::max(mx, v[j]);
          mn = std::min(mn, v[j]);
          sum += v[j];
          sq += v[j] * v[j];
        }
        expect[j] = mx;
        expect[nh + j] = mn;
        expect[2 * nh + j] = sum / k;
        expect[3 * nh + j] = std::sqrt(sq);
      }
    }
    if (got.dim() != 4 * nh) {
      ok = false;
      why = "wrong output dim";
      break;
    }
    for (int j = 0; j < 4 * nh; ++j) {
      if (std::abs(got[j] - expect[j]) > 1e-12) {
        ok = false;
        why = "mismatch at iter " + std::to_string(iter);
        break;
      }
    }
    if (k == 0) {
      for (int j = 0; j < 4 * nh; ++j) {
        if (got[j] != 0.0) {
          ok = false;
          why = "empty part not zero";
        }
      }
    }
  }
  report("pooling-oracle", ok,
         ok ? "1000 random parts, K in 0..6, dim <= 5, tol 1e-12" : why);
}

// ---- criterion 4: LSTM triviality -------------------------------------------

void check_lstm_triviality() {
  LstmParams p = make_lstm_params("p", 4, 3);
  Tape tape;
  const LstmStepValues s =
      lstm_step(tape, p, tape.input(Vec(4)), tape.input(Vec(4)),
                tape.input(Vec(3)));
  bool ok = true;
  for (int j = 0; j < 4; ++j) {
    ok = ok && s.i.val()[j] == 0.5 && s.f.val()[j] == 0.5 &&
         s.o.val()[j] == 0.5 && s.h.val()[j] == 0.0 && s.c.val()[j] == 0.0;
  }

  LstmParams fwd = make_lstm_params("f", 4, 3);
  LstmParams bwd = make_lstm_params("b", 4, 3);
  ProjectionParams proj = make_projection_params("proj", 2, 8);
  Tape t2;
  Rng rng(23);
  std::vector<Value> xs;
  for (int i = 0; i < 5; ++i) {
    Vec v(3);
    for (double& x : v.span()) x = rng.uniform(-1, 1);
    xs.push_back(t2.input(v));
  }
  for (const Value& h : encode(t2, xs, fwd, bwd, proj)) {
    for (int j = 0; j < 2; ++j) ok = ok && h.val()[j] == 0.0;
  }
  report("lstm-triviality", ok,
         "zero parameters: gates exactly 0.5, states exactly 0");
}

// ---- criterion 5: softmax stability ----------------------------------------

void check_softmax() {
  Rng rng(29);
  bool ok = true;
  for (int iter = 0; iter < 10000 && ok; ++iter) {
    const int n = 2 + static_cast<int>(rng.below(19));
    // One third of the draws use extreme magnitudes around 1e3.
    const double span = iter % 3 == 0 ? 1e3 : 10.0;
    Vec z(n);
    for (double& x : z.span()) x = rng.uniform(-span, span);
    const Vec p = softmax(z);
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(p[i]) || p[i] < 0.0) ok = false;
      sum += p[i];
    }
    if (std::abs(sum - 1.0) > 1e-9) ok = false;
  }
  const Vec u = softmax(Vec(7, 0.0));
  for (int i = 0; i < 7; ++i) {
    if (std::abs(u[i] - 1.0 / 7.0) > 1e-15) ok = false;
  }
  report("softmax-stability", ok,
         "10000 random logit vectors incl. magnitude 1e3; uniform at zero");
}

// ---- criterion 6: determinism ----------------------------------------------

void check_determinism() {
  const std::string args =
      "train -c " + kFix + "/toy_config.json --train " + kFix +
      "/toy_train.jsonl --embeddings " + kFix + "/mini_embeddings.txt";
  const int c1 =
      run_cli(args + " --checkpoint acc_det_a.ckpt --log acc_det_a.log");
  const int c2 =
      run_cli(args + " --checkpoint acc_det_b.ckpt --log acc_det_b.log");
  const std::string ck1 = slurp("acc_det_a.ckpt"), ck2 = slurp("acc_det_b.ckpt");
  const std::string lg1 = slurp("acc_det_a.log"), lg2 = slurp("acc_det_b.log");
  const bool ok = c1 == 0 && c2 == 0 && !ck1.empty() && ck1 == ck2 &&
                  !lg1.empty() && lg1 == lg2;
  for (const char* f :
       {"acc_det_a.ckpt", "acc_det_b.ckpt", "acc_det_a.log", "acc_det_b.log"}) {
    std::remove(f);
  }
  report("determinism", ok,
         "two identical CLI runs: byte-identical checkpoint and log");
}

// ---- criterion 7: frozen embeddings ----------------------------------------

void check_frozen_embeddings() {
  Built b = build_toy(/*max_epochs=*/3);
  Rng rng(b.cfg.seed);
  init_params(b.model, rng);

  const Mat before = b.model.feats.pre.table.value;
  bool had_content = false;
  for (double x : before.raw()) had_content = had_content || x != 0.0;

  train(b.model, b.insts, {}, rng, nullptr);
  const bool ok = had_content && b.model.feats.pre.table.value == before;
  report("frozen-embeddings", ok,
         "pre-trained table bytes unchanged by training");
}

// ---- criterion 8: segmentation ---------------------------------------------

void check_segmentation() {
  bool ok = true;
  std::string why;

  {
    const auto toks = split_ws(
        "In this comprehensive guide , over 850 roses are described , "
        "illustrated , and arranged by group .");
    const Segments s = segment(static_cast<int>(toks.size()),
                               EntitySpans{3, 3, 7, 7});
    auto eq = [&](Range r, const std::vector<std::string>& want) {
      std::vector<std::string> got(toks.begin() + r.begin,
                                   toks.begin() + r.end);
      return got == want;
    };
    ok = ok && eq(s.before, {"In", "this", "comprehensive"}) &&
         eq(s.former, {"guide"}) && eq(s.middle, {",", "over", "850"}) &&
         eq(s.latter, {"roses"}) &&
         eq(s.after, {"are", "described", ",", "illustrated", ",", "and",
                      "arranged", "by", "group", "."});
    if (!ok) why = "guide/roses example";
  }

  if (ok) {
    const auto toks = split_ws(
        "Vibrio salmonicida was detected in sediment samples from diseased "
        "farms . It was also detected in a sediment sample from a "
        "disease-free fish farm .");
    const Segments s = segment(static_cast<int>(toks.size()),
                               EntitySpans{0, 1, 17, 23});
    ok = s.before.empty() && s.former == Range{0, 2} &&
         s.middle == Range{2, 17} && s.latter == Range{17, 24} &&
         s.after == Range{24, 25};
    if (!ok) why = "Vibrio example (empty before part)";
  }
  report("segmentation", ok,
         ok ? "both worked examples match, including the empty before part"
            : why);
}

// ---- criterion 9: scorer ----------------------------------------------------

void check_scorer() {
  bool ok = true;
  std::string why;

  // Golden fixture, hand-computed: CE 1/2, MT 2/3 -> macro 7/12.
  const std::vector<std::string> gold{
      "Cause-Effect(e1,e2)", "Cause-Effect(e2,e1)", "Message-Topic(e1,e2)",
      "Other"};
  const std::vector<std::string> pred{
      "Cause-Effect(e2,e1)", "Cause-Effect(e2,e1)", "Message-Topic(e1,e2)",
      "Message-Topic(e1,e2)"};
  if (std::abs(semeval_macro_f1(gold, pred).aggregate - 7.0 / 12.0) > 1e-9) {
    ok = false;
    why = "hand-computed fixture";
  }

  if (ok && std::abs(semeval_macro_f1(gold, gold).aggregate - 1.0) > 1e-12) {
    ok = false;
    why = "perfect prediction";
  }

  const std::vector<std::string> no_other{"Entity-Origin(e1,e2)",
                                          "Product-Producer(e2,e1)"};
  const std::vector<std::string> all_other{"Other", "Other"};
  if (ok && semeval_macro_f1(no_other, all_other).aggregate != 0.0) {
    ok = false;
    why = "all-Other vs no-Other";
  }
  report("semeval-scorer", ok,
         ok ? "golden fixture 7/12, perfect 1.0, degenerate 0.0" : why);
}

// ---- criterion 10: SDP -------------------------------------------------------

std::vector<int> bfs_oracle(const DepSentence& s, int a, int b) {
  const int n = static_cast<int>(s.tokens.size());
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int h = s.tokens[static_cast<std::size_t>(i)].head;
    if (h != 0) {
      adj[static_cast<std::size_t>(i)].push_back(h - 1);
      adj[static_cast<std::size_t>(h - 1)].push_back(i);
    }
  }
  std::vector<int> parent(static_cast<std::size_t>(n), -2);
  std::deque<int> q{a};
  parent[static_cast<std::size_t>(a)] = -1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop_front();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (parent[static_cast<std::size_t>(v)] == -2) {
        parent[static_cast<std::size_t>(v)] = u;
        q.push_back(v);
      }
    }
  }
  std::vector<int> path;
  for (int u = b; u != -1; u = parent[static_cast<std::size_t>(u)])
    path.push_back(u);
  std::reverse(path.begin(), path.end());
  return path;
}

bool corpus_counts(const char* conllu_env, const char* spans_env,
                   long long middle, long long sdp, long long both,
                   std::string* note) {
  const char* conllu = std::getenv(conllu_env);
  const char* spans = std::getenv(spans_env);
  if (conllu == nullptr || spans == nullptr) {
    *note = "skipped (corpus not supplied)";
    return true;
  }
  std::vector<DepSentence> sents = parse_conllu_file(conllu);
  attach_spans(sents, spans);
  const OverlapStats st = overlap_stats(sents);
  std::ostringstream os;
  os << st.middle_count << "/" << st.sdp_count << "/" << st.both_count;
  *note = os.str();
  return st.middle_count == middle && st.sdp_count == sdp &&
         st.both_count == both;
}

void check_sdp() {
  bool ok = true;
  std::string why;

  auto sents = parse_conllu_file(kFix + "/cradle.conllu");
  attach_spans(sents, kFix + "/cradle_spans.jsonl");
  const std::vector<int> path = shortest_dep_path(sents[0], 1, 7);
  if (path != std::vector<int>{1, 4, 5, 7}) {
    ok = false;
    why = "worked path";
  }
  const OverlapStats st = overlap_stats(sents);
  if (ok && !(st.middle_count == 5 && st.sdp_count == 2 && st.both_count == 2 &&
              std::abs(st.proportion() - 1.0) < 1e-12)) {
    ok = false;
    why = "worked overlap stats";
  }

  Rng rng(37);
  for (int iter = 0; iter < 500 && ok; ++iter) {
    const int n = 2 + static_cast<int>(rng.below(11));
    DepSentence s;
    s.id = "r";
    for (int i = 0; i < n; ++i) {
      s.tokens.push_back(
          {"w" + std::to_string(i),
           i == 0 ? 0 : static_cast<int>(rng.below(i)) + 1, "dep"});
    }
    const int a = static_cast<int>(rng.below(n));
    const int b = static_cast<int>(rng.below(n));
    if (shortest_dep_path(s, a, b) != bfs_oracle(s, a, b)) {
      ok = false;
      why = "random-tree oracle mismatch";
    }
  }

  std::string se_note, bb_note;
  if (ok && !corpus_counts("RELCLASS_SEMEVAL_CONLLU", "RELCLASS_SEMEVAL_SPANS",
                           26940, 13360, 11054, &se_note)) {
    ok = false;
    why = "corpus counts (expected 26940/13360/11054, got " + se_note + ")";
  }
  if (ok && !corpus_counts("RELCLASS_BB3_CONLLU", "RELCLASS_BB3_SPANS", 1537,
                           769, 466, &bb_note)) {
    ok = false;
    why = "corpus counts (expected 1537/769/466, got " + bb_note + ")";
  }
  std::ostringstream d;
  if (ok) {
    d << "worked example 5/2/2/1.0; 500 random trees vs BFS; corpus counts "
      << se_note << ", " << bb_note;
  } else {
    d << why;
  }
  report("sdp-overlap", ok, d.str());
}

// ---- criterion 11: hyperparameter defaults ----------------------------------

void check_defaults() {
  const HyperParams hp;
  const bool ok = hp.alpha == 0.01 && hp.beta == 1e-8 && hp.n_pre == 200 &&
                  hp.n_ran == 50 && hp.n_char == 50 && hp.n_pos == 50 &&
                  hp.n_wnh == 50 && hp.n_lstm == 200 && hp.n_h == 200 &&
                  hp.init_lo == -0.01 && hp.init_hi == 0.01;
  report("hyperparameter-defaults", ok,
         "alpha 0.01, beta 1e-8, n_pre 200, others 50, n_lstm = n_h = 200, "
         "init uniform(-0.01, 0.01)");
}

// ---- criterion 12: ablation plumbing ----------------------------------------

void check_ablation() {
  bool ok = true;
  std::string why;

  // Channel widths of the toy config: pre 4, ran 4, char 4, pos 3, wnh 3.
  const int widths[5] = {4, 4, 4, 3, 3};
  const int full_token_dim = 4 + 4 + 4 + 3 + 3;

  for (int channel = 0; channel < 5 && ok; ++channel) {
    Built b = build_toy(/*max_epochs=*/1);
    switch (channel) {
      case 0: b.cfg.channels.pre = false; break;
      case 1: b.cfg.channels.ran = false; break;
      case 2: b.cfg.channels.chr = false; break;
      case 3: b.cfg.channels.pos = false; break;
      case 4: b.cfg.channels.wnh = false; break;
    }
    // Rebuild under the ablated config.
    std::vector<const Token*> toks;
    for (const auto& inst : b.insts)
      for (const Token& t : inst.tokens) toks.push_back(&t);
    VocabConfig vc{b.cfg.hp.n_ran, b.cfg.hp.n_char, b.cfg.hp.n_pos,
                   b.cfg.hp.n_wnh, b.cfg.char_lowercase};
    LookupTable pre =
        load_embeddings(kFix + "/mini_embeddings.txt", b.cfg.hp.n_pre);
    ModelParams m = build_model(b.cfg, std::move(pre), build_vocab(toks, vc));

    if (m.token_dim() != full_token_dim - widths[channel]) {
      ok = false;
      why = "channel " + std::to_string(channel) + " token dim";
      break;
    }
    if (m.penultimate_dim() != 20 * b.cfg.hp.n_h) {
      ok = false;
      why = "channel ablation must not change the penultimate width";
      break;
    }
    // End to end: one train step and one prediction.
    Rng rng(3);
    init_params(m, rng);
    Tape tape;
    const int gold = m.schema.index_of(b.insts[0].label);
    const Value loss = build_loss(tape, m, b.insts[0], gold);
    const Gradients g = tape.backward(loss);
    AdaGradState st = make_adagrad(m);
    adagrad_step(m, g, st);
    (void)predict(m, b.insts[0]);
  }

  // Context parts: penultimate = 4 * n_h * parts, entities always included.
  const ContextFlags combos[4] = {
      {true, true, true}, {false, true, true}, {false, true, false},
      {false, false, false}};
  const int parts[4] = {5, 4, 3, 2};
  for (int i = 0; i < 4 && ok; ++i) {
    Built b = build_toy(/*max_epochs=*/1);
    b.cfg.contexts = combos[i];
    std::vector<const Token*> toks;
    for (const auto& inst : b.insts)
      for (const Token& t : inst.tokens) toks.push_back(&t);
    VocabConfig vc{b.cfg.hp.n_ran, b.cfg.hp.n_char, b.cfg.hp.n_pos,
                   b.cfg.hp.n_wnh, b.cfg.char_lowercase};
    LookupTable pre =
        load_embeddings(kFix + "/mini_embeddings.txt", b.cfg.hp.n_pre);
    ModelParams m = build_model(b.cfg, std::move(pre), build_vocab(toks, vc));
    if (m.penultimate_dim() != 4 * b.cfg.hp.n_h * parts[i]) {
      ok = false;
      why = "context combo " + std::to_string(i) + " penultimate dim";
      break;
    }
    if (m.out.w2.value.cols() != m.penultimate_dim()) {
      ok = false;
      why = "W2 width must track the penultimate dim";
      break;
    }
    Rng rng(3);
    init_params(m, rng);
    Tape tape;
    const int gold = m.schema.index_of(b.insts[0].label);
    const Value loss = build_loss(tape, m, b.insts[0], gold);
    const Gradients g = tape.backward(loss);
    AdaGradState st = make_adagrad(m);
    adagrad_step(m, g, st);
    (void)predict(m, b.insts[0]);
  }

  report("ablation-plumbing", ok,
         ok ? "each channel and context switch changes only the declared "
              "dimensions and trains end to end"
            : why);
}

}  // namespace

int main() {
  check_gradient_fidelity();
  check_overfit();
  check_pooling_oracle();
  check_lstm_triviality();
  check_softmax();
  check_determinism();
  check_frozen_embeddings();
  check_segmentation();
  check_scorer();
  check_sdp();
  check_defaults();
  check_ablation();

  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED"
                                : std::to_string(g_failures) +
                                      " CRITERIA FAILED")
            << std::endl;
  return g_failures == 0 ? 0 : 1;
}
