#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "relclass/data_io.hpp"
#include "relclass/errors.hpp"
#include "relclass/evaluation.hpp"
#include "relclass/model.hpp"
#include "relclass/training.hpp"

using namespace relclass;

namespace {

RunConfig toy_config() {
  RunConfig cfg;
  cfg.task = "semeval";
  cfg.seed = 7;
  cfg.hp.n_pre = 4;
  cfg.hp.n_ran = 4;
  cfg.hp.n_char = 4;
  cfg.hp.n_pos = 3;
  cfg.hp.n_wnh = 3;
  cfg.hp.n_lstm = 5;
  cfg.hp.n_h = 4;
  cfg.hp.alpha = 0.1;
  cfg.hp.max_epochs = 60;
  cfg.hp.patience = 60;
  return cfg;
}

std::vector<RelationInstance> toy_instances() {
  return parse_corpus_jsonl_file(std::string(FIXTURE_DIR) + "/toy_train.jsonl");
}

ModelParams toy_model(const RunConfig& cfg,
                      const std::vector<RelationInstance>& insts) {
  std::vector<const Token*> corpus;
  for (const auto& inst : insts)
    for (const Token& t : inst.tokens) corpus.push_back(&t);
  VocabConfig vc;
  vc.n_ran = cfg.hp.n_ran;
  vc.n_char = cfg.hp.n_char;
  vc.n_pos = cfg.hp.n_pos;
  vc.n_wnh = cfg.hp.n_wnh;
  vc.char_lowercase = cfg.char_lowercase;
  LookupTable pre = make_table("pre", cfg.hp.n_pre);
  pre.table.frozen = true;
  pre.lowercase = true;
  return build_model(cfg, std::move(pre), build_vocab(corpus, vc));
}

// Simple one-parameter model stand-in for exact AdaGrad arithmetic: the
// optimizer only sees parameter blocks, so a minimal ModelParams with
// everything at dim 1..2 works.
struct TinySetup {
  RunConfig cfg;
  std::vector<RelationInstance> insts;
  ModelParams model;
};

TinySetup tiny_setup() {
  TinySetup s{toy_config(), toy_instances(), {}};
  s.model = toy_model(s.cfg, s.insts);
  return s;
}

}  // namespace

TEST_CASE("uniform logits give ln(19) loss; a confident gold gives ~0") {
  TinySetup s = tiny_setup();
  // Zero parameters: logits are exactly zero, so loss = ln |R| = ln 19.
  Tape t;
  const int gold = s.model.schema.index_of(s.insts[0].label);
  const Value loss = build_loss(t, s.model, s.insts[0], gold);
  CHECK(loss.val()[0] == doctest::Approx(std::log(19.0)).epsilon(1e-12));

  // predict() agrees with score() on the same zero model: uniform probs,
  // argmax falls to index 0.
  const Prediction p = predict(s.model, s.insts[0]);
  CHECK(p.index == 0);
  CHECK(p.label == s.model.schema.labels[0]);
  for (int i = 0; i < 19; ++i)
    CHECK(p.probs[i] == doctest::Approx(1.0 / 19.0).epsilon(1e-12));
}

TEST_CASE("loss equals -log of the predicted gold probability") {
  TinySetup s = tiny_setup();
  Rng rng(5);
  init_params(s.model, rng);
  const int gold = s.model.schema.index_of(s.insts[3].label);

  Tape t;
  const Value loss = build_loss(t, s.model, s.insts[3], gold);
  const Prediction p = predict(s.model, s.insts[3]);
  CHECK(loss.val()[0] ==
        doctest::Approx(-std::log(p.probs[gold])).epsilon(1e-10));
}

TEST_CASE("adagrad first step moves every touched coordinate by -alpha") {
  // With acc starting at 0, theta -= alpha * g / (sqrt(g^2) + eps), i.e.
  // alpha * sign(g) up to the epsilon softening.
  TinySetup s = tiny_setup();
  s.model.hp.alpha = 0.01;
  s.model.hp.beta = 0.0;  // isolate the gradient term
  s.model.hp.epsilon = 0.0;

  Tape t;
  const int gold = s.model.schema.index_of(s.insts[0].label);
  const Value loss = build_loss(t, s.model, s.insts[0], gold);
  const Gradients g = t.backward(loss);

  const Mat w2_before = s.model.out.w2.value;
  const Mat gw2 = g.of(s.model.out.w2);
  AdaGradState st = make_adagrad(s.model);
  adagrad_step(s.model, g, st);

  for (int r = 0; r < w2_before.rows(); ++r)
    for (int c = 0; c < w2_before.cols(); ++c) {
      const double delta = s.model.out.w2.value(r, c) - w2_before(r, c);
      if (gw2(r, c) == 0.0) {
        CHECK(delta == 0.0);
      } else {
        CHECK(delta ==
              doctest::Approx(-0.01 * (gw2(r, c) > 0 ? 1.0 : -1.0))
                  .epsilon(1e-12));
      }
    }
}

TEST_CASE("two identical steps follow the 1 + 1/sqrt(2) schedule") {
  // Constant gradient g twice: acc = g^2 then 2g^2, moves alpha and
  // alpha/sqrt(2). Exercised through a hand-built single-block model.
  TinySetup s = tiny_setup();
  s.model.hp.alpha = 0.01;
  s.model.hp.beta = 0.0;
  s.model.hp.epsilon = 0.0;

  // Capture one gradient, then replay the SAME gradient twice so the
  // schedule is exact.
  Tape t;
  const int gold = s.model.schema.index_of(s.insts[0].label);
  const Gradients g = t.backward(build_loss(t, s.model, s.insts[0], gold));
  const Mat gw2 = g.of(s.model.out.w2);
  const Mat before = s.model.out.w2.value;

  AdaGradState st = make_adagrad(s.model);
  adagrad_step(s.model, g, st);
  const Mat after1 = s.model.out.w2.value;
  adagrad_step(s.model, g, st);
  const Mat after2 = s.model.out.w2.value;

  for (int r = 0; r < before.rows(); ++r)
    for (int c = 0; c < before.cols(); ++c) {
      if (gw2(r, c) == 0.0) continue;
      const double sign = gw2(r, c) > 0 ? 1.0 : -1.0;
      CHECK(after1(r, c) - before(r, c) ==
            doctest::Approx(-0.01 * sign).epsilon(1e-12));
      CHECK(after2(r, c) - after1(r, c) ==
            doctest::Approx(-0.01 * sign / std::sqrt(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("weight decay alone moves parameters once beta is nonzero") {
  TinySetup s = tiny_setup();
  Rng rng(5);
  init_params(s.model, rng);
  s.model.hp.beta = 1e-8;

  // Zero gradients for every block: g = beta * theta only.
  Tape t;
  struct Tracker : ParamVisitor {
    Tape& t;
    explicit Tracker(Tape& t) : t(t) {}
    void mat(MatParam& p) override { t.track(p); }
    void vec(VecParam& p) override { t.track(p); }
  } tracker{t};
  visit_tuned(s.model, tracker);
  const Value zero_loss = t.softmax_xent(t.input(Vec{0.0, 0.0}), 0);
  const Gradients g = t.backward(zero_loss);

  const double w_before = s.model.proj.w1.value(0, 0);
  AdaGradState st = make_adagrad(s.model);
  adagrad_step(s.model, g, st);
  if (w_before != 0.0) {
    CHECK(s.model.proj.w1.value(0, 0) != w_before);
  }
}

TEST_CASE("adagrad skips frozen tensors and accumulators never shrink") {
  TinySetup s = tiny_setup();
  Rng rng(6);
  init_params(s.model, rng);
  for (double& x : s.model.feats.pre.table.value.raw()) x = 0.25;

  const Mat pre_before = s.model.feats.pre.table.value;
  AdaGradState st = make_adagrad(s.model);
  Mat acc_before;
  for (int step = 0; step < 3; ++step) {
    Tape t;
    const int gold = s.model.schema.index_of(s.insts[step].label);
    const Gradients g = t.backward(build_loss(t, s.model, s.insts[step], gold));
    if (step > 0) acc_before = st.acc_mat.at(&s.model.out.w2);
    adagrad_step(s.model, g, st);
    if (step > 0) {
      const Mat& acc_after = st.acc_mat.at(&s.model.out.w2);
      for (int r = 0; r < acc_after.rows(); ++r)
        for (int c = 0; c < acc_after.cols(); ++c)
          CHECK(acc_after(r, c) >= acc_before(r, c));
    }
  }
  CHECK(s.model.feats.pre.table.value == pre_before);
}

TEST_CASE("training memorizes a single instance nearly perfectly") {
  TinySetup s = tiny_setup();
  s.model.hp.max_epochs = 400;
  s.model.hp.patience = 400;
  Rng rng(s.cfg.seed);
  init_params(s.model, rng);

  const std::vector<RelationInstance> one{s.insts[0]};
  const TrainResult res = train(s.model, one, {}, rng, nullptr);
  CHECK(res.epochs_run == 400);
  CHECK(res.log.back().mean_loss < 1e-3);

  const Prediction p = predict(s.model, one[0]);
  CHECK(p.label == one[0].label);
}

TEST_CASE("same seed and data reproduce training bit for bit") {
  auto run = [] {
    TinySetup s = tiny_setup();
    s.model.hp.max_epochs = 5;
    Rng rng(11);
    init_params(s.model, rng);
    std::ostringstream log;
    train(s.model, s.insts, {}, rng, &log);
    return std::make_pair(log.str(), s.model.out.w2.value);
  };
  const auto [log1, w1] = run();
  const auto [log2, w2] = run();
  CHECK(log1 == log2);
  CHECK(w1 == w2);  // exact double equality
}

TEST_CASE("the epoch log is one JSON line per epoch without timestamps") {
  TinySetup s = tiny_setup();
  s.model.hp.max_epochs = 3;
  Rng rng(12);
  init_params(s.model, rng);
  std::ostringstream log;
  const TrainResult res = train(s.model, s.insts, {}, rng, &log);
  CHECK(res.epochs_run == 3);

  std::istringstream lines(log.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    ++count;
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("epoch"));
    CHECK(j.contains("mean_loss"));
    CHECK_FALSE(j.contains("time"));
    CHECK_FALSE(j.contains("timestamp"));
  }
  CHECK(count == 3);
  CHECK(res.log.size() == 3);
}

TEST_CASE("dev-driven early stop with zero patience halts when stale") {
  TinySetup s = tiny_setup();
  s.model.hp.max_epochs = 50;
  s.model.hp.patience = 0;  // treated as max(1, patience)
  Rng rng(13);
  init_params(s.model, rng);

  // Same data for train and dev; stops at the first non-improving epoch.
  const TrainResult res = train(s.model, s.insts, s.insts, rng, nullptr);
  CHECK(res.epochs_run < 50);
  CHECK(res.best_epoch >= 1);
  CHECK(res.best_metric >= 0.0);

  // The kept model scores exactly the reported best metric on dev.
  std::vector<std::string> gold, pred;
  for (const auto& inst : s.insts) {
    gold.push_back(inst.label);
    pred.push_back(predict(s.model, inst).label);
  }
  const EvalReport rep = evaluate(s.model.schema, gold, pred);
  CHECK(rep.aggregate == doctest::Approx(res.best_metric).epsilon(1e-12));
}

TEST_CASE("training refuses an empty train set and unknown labels") {
  TinySetup s = tiny_setup();
  Rng rng(14);
  CHECK_THROWS_AS(train(s.model, {}, {}, rng, nullptr), DataError);

  std::vector<RelationInstance> bad = {s.insts[0]};
  bad[0].label = "Nonsense(e1,e2)";
  CHECK_THROWS_AS(train(s.model, bad, {}, rng, nullptr), DataError);
}

TEST_CASE("gradcheck passes on a fresh model and reports frozen blocks") {
  TinySetup s = tiny_setup();
  Rng rng(15);
  init_params(s.model, rng);
  // Give the frozen table real content so its (absent) gradient would be
  // noticed if it leaked into the check.
  for (double& x : s.model.feats.pre.table.value.raw()) x = 0.1;
  add_word(s.model.feats.pre, "the");

  std::vector<RelationInstance> two{s.insts[0], s.insts[1]};
  const GradCheckResult res = gradcheck(s.model, two, rng, 10, 1e-4);
  CHECK(res.pass(1e-4));
  CHECK(res.max_rel_err <= 1e-4);

  bool saw_frozen = false, saw_checked = false;
  for (const BlockReport& b : res.blocks) {
    if (b.name == "pre") {
      CHECK(b.skipped);
      saw_frozen = true;
    }
    if (b.checked > 0) saw_checked = true;
  }
  CHECK(saw_frozen);
  CHECK(saw_checked);
}

TEST_CASE("gradcheck fails loudly under a corrupted tanh derivative") {
  TinySetup s = tiny_setup();
  Rng rng(16);
  init_params(s.model, rng);
  std::vector<RelationInstance> two{s.insts[0], s.insts[1]};

  detail::tanh_backward_scale = 1.05;
  const GradCheckResult res = gradcheck(s.model, two, rng, 10, 1e-4);
  detail::tanh_backward_scale = 1.0;
  CHECK_FALSE(res.pass(1e-4));
  CHECK(res.max_rel_err > 1e-2);
}
