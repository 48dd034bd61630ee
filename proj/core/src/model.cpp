#include "relclass/model.hpp"

#include <cmath>

#include "relclass/errors.hpp"

namespace relclass {

int ModelParams::penultimate_dim() const {
  int parts = 2;
  if (contexts.before) ++parts;
  if (contexts.middle) ++parts;
  if (contexts.after) ++parts;
  return parts * 4 * hp.n_h;
}

namespace {

void visit_lstm(LstmParams& p, ParamVisitor& v) {
  v.mat(p.wi);
  v.mat(p.wf);
  v.mat(p.wo);
  v.mat(p.wc);
  v.vec(p.bi);
  v.vec(p.bf);
  v.vec(p.bo);
  v.vec(p.bc);
}

}  // namespace

void visit_tuned(ModelParams& m, ParamVisitor& v) {
  v.mat(m.feats.ran.table);
  v.mat(m.feats.chars.table);
  v.mat(m.feats.pos.table);
  v.mat(m.feats.wnh.table);
  visit_lstm(m.feats.char_fwd, v);
  visit_lstm(m.feats.char_bwd, v);
  visit_lstm(m.tok_fwd, v);
  visit_lstm(m.tok_bwd, v);
  v.mat(m.proj.w1);
  v.vec(m.proj.b1);
  v.mat(m.out.w2);
}

void visit_all(ModelParams& m, ParamVisitor& v) {
  v.mat(m.feats.pre.table);
  visit_tuned(m, v);
}

ModelParams build_model(const RunConfig& cfg, LookupTable pre_table,
                        BuiltVocabs vocabs) {
  cfg.validate();
  ModelParams m;
  m.hp = cfg.hp;
  m.schema = LabelSchema::for_task(cfg.task);
  m.contexts = cfg.contexts;

  m.feats.flags = cfg.channels;
  m.feats.pre = std::move(pre_table);
  m.feats.pre.table.frozen = true;
  m.feats.ran = std::move(vocabs.ran);
  m.feats.chars = std::move(vocabs.chars);
  m.feats.pos = std::move(vocabs.pos);
  m.feats.wnh = std::move(vocabs.wnh);
  const int n_cdir = cfg.hp.n_char / 2;
  m.feats.char_fwd = make_lstm_params("char_fwd", n_cdir, m.feats.chars.dim());
  m.feats.char_bwd = make_lstm_params("char_bwd", n_cdir, m.feats.chars.dim());

  const int tok_dim = m.feats.token_dim();
  if (tok_dim <= 0) throw ConfigError("no feature channel enabled");
  m.tok_fwd = make_lstm_params("tok_fwd", cfg.hp.n_lstm, tok_dim);
  m.tok_bwd = make_lstm_params("tok_bwd", cfg.hp.n_lstm, tok_dim);
  m.proj = make_projection_params("proj", cfg.hp.n_h, 2 * cfg.hp.n_lstm);
  m.out = make_output_params("w2", static_cast<int>(m.schema.labels.size()),
                             m.penultimate_dim());
  return m;
}

namespace {

struct InitVisitor final : ParamVisitor {
  Rng& rng;
  double lo, hi;
  InitVisitor(Rng& r, double l, double h) : rng(r), lo(l), hi(h) {}
  void mat(MatParam& p) override {
    for (double& x : p.value.raw()) x = rng.uniform(lo, hi);
  }
  void vec(VecParam& p) override {
    for (double& x : p.value.span()) x = rng.uniform(lo, hi);
  }
};

}  // namespace

void init_params(ModelParams& m, Rng& rng) {
  InitVisitor v(rng, m.hp.init_lo, m.hp.init_hi);
  visit_tuned(m, v);
}

namespace {

struct TrackVisitor final : ParamVisitor {
  Tape& tape;
  explicit TrackVisitor(Tape& t) : tape(t) {}
  void mat(MatParam& p) override { tape.track(p); }
  void vec(VecParam& p) override { tape.track(p); }
};

// Embeds, encodes, segments and pools one instance up to the penultimate
// vector shared by training and prediction.
Value forward_penultimate(Tape& tape, ModelParams& m,
                          const RelationInstance& inst) {
  const int n = static_cast<int>(inst.tokens.size());
  if (n == 0) throw DataError("instance '" + inst.id + "': no tokens");
  validate(inst.spans, n);

  std::vector<Value> xs;
  xs.reserve(inst.tokens.size());
  for (const Token& tok : inst.tokens) {
    xs.push_back(embed_token(tape, m.feats, tok));
  }
  const std::vector<Value> h = encode(tape, xs, m.tok_fwd, m.tok_bwd, m.proj);
  const Segments segs = segment(n, inst.spans);
  return penultimate(tape, h, segs, m.contexts, m.hp.n_h);
}

}  // namespace

Value build_loss(Tape& tape, ModelParams& m, const RelationInstance& inst,
                 int gold_index) {
  TrackVisitor tracker(tape);
  visit_tuned(m, tracker);

  const Value xp = forward_penultimate(tape, m, inst);
  if (!all_finite(xp.val())) {
    throw NumericError("instance '" + inst.id +
                       "': non-finite penultimate vector");
  }
  const Value logits = tape.matvec(m.out.w2, xp);
  if (!all_finite(logits.val())) {
    throw NumericError("instance '" + inst.id + "': non-finite logits");
  }
  const Value loss = tape.softmax_xent(logits, gold_index);
  if (!std::isfinite(loss.val()[0])) {
    throw NumericError("instance '" + inst.id + "': non-finite loss");
  }
  return loss;
}

Prediction predict(ModelParams& m, const RelationInstance& inst) {
  Tape tape;
  const Value xp = forward_penultimate(tape, m, inst);
  if (!all_finite(xp.val())) {
    throw NumericError("instance '" + inst.id +
                       "': non-finite penultimate vector");
  }
  Prediction pred;
  pred.probs = score(xp.val(), m.out);
  pred.index = argmax(pred.probs);
  pred.label = m.schema.labels[static_cast<std::size_t>(pred.index)];
  return pred;
}

}  // namespace relclass
