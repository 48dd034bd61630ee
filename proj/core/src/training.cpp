#include "relclass/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "relclass/errors.hpp"
#include "relclass/evaluation.hpp"

namespace relclass {

namespace {

struct AccInitVisitor final : ParamVisitor {
  AdaGradState& st;
  explicit AccInitVisitor(AdaGradState& s) : st(s) {}
  void mat(MatParam& p) override {
    st.acc_mat.emplace(&p, Mat(p.value.rows(), p.value.cols()));
  }
  void vec(VecParam& p) override { st.acc_vec.emplace(&p, Vec(p.value.dim())); }
};

struct StepVisitor final : ParamVisitor {
  const Gradients& grads;
  AdaGradState& st;
  StepVisitor(const Gradients& g, AdaGradState& s) : grads(g), st(s) {}

  void update(const std::string& name, std::span<const double> grad,
              std::span<double> acc, std::span<double> theta) const {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad[i] + st.beta * theta[i];
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in block '" + name + "'");
      }
      // A zero gradient never moves the weight; skipping it also keeps the
      // step well-defined when acc and epsilon are both zero.
      if (g == 0.0) continue;
      acc[i] += g * g;
      theta[i] -= st.alpha * g / (std::sqrt(acc[i]) + st.epsilon);
      if (!std::isfinite(theta[i])) {
        throw NumericError("non-finite parameter in block '" + name + "'");
      }
    }
  }

  void mat(MatParam& p) override {
    if (p.frozen || !grads.tracks(p)) return;
    update(p.name, grads.of(p).raw(), st.acc_mat.at(&p).raw(), p.value.raw());
  }
  void vec(VecParam& p) override {
    if (p.frozen || !grads.tracks(p)) return;
    update(p.name, grads.of(p).span(), st.acc_vec.at(&p).span(),
           p.value.span());
  }
};

}  // namespace

AdaGradState make_adagrad(ModelParams& m) {
  AdaGradState st;
  st.alpha = m.hp.alpha;
  st.beta = m.hp.beta;
  st.epsilon = m.hp.epsilon;
  AccInitVisitor v(st);
  visit_tuned(m, v);
  return st;
}

void adagrad_step(ModelParams& m, const Gradients& grads, AdaGradState& st) {
  StepVisitor v(grads, st);
  visit_tuned(m, v);
}

TrainResult train(ModelParams& m, const std::vector<RelationInstance>& train_set,
                  const std::vector<RelationInstance>& dev_set, Rng& rng,
                  std::ostream* log) {
  if (train_set.empty()) throw DataError("train: empty corpus");
  std::vector<int> gold(train_set.size());
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    try {
      gold[i] = m.schema.index_of(train_set[i].label);
    } catch (const DataError& e) {
      throw DataError("instance '" + train_set[i].id + "': " +
                      std::string(e.what()));
    }
  }
  std::vector<std::string> dev_gold;
  for (const RelationInstance& inst : dev_set) {
    m.schema.index_of(inst.label);
    dev_gold.push_back(inst.label);
  }

  AdaGradState st = make_adagrad(m);
  std::vector<int> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  TrainResult res;
  ModelParams best = m;
  double best_metric = -std::numeric_limits<double>::infinity();
  int stale = 0;
  const int stop_after = std::max(1, m.hp.patience);

  for (int epoch = 1; epoch <= m.hp.max_epochs; ++epoch) {
    rng.shuffle(order);
    double sum_loss = 0;
    for (int i : order) {
      const RelationInstance& inst = train_set[static_cast<std::size_t>(i)];
      Tape tape;
      const Value loss =
          build_loss(tape, m, inst, gold[static_cast<std::size_t>(i)]);
      sum_loss += loss.val()[0];
      const Gradients grads = tape.backward(loss);
      adagrad_step(m, grads, st);
    }

    EpochLog el;
    el.epoch = epoch;
    el.mean_loss = sum_loss / static_cast<double>(train_set.size());
    if (!dev_set.empty()) {
      std::vector<std::string> pred;
      pred.reserve(dev_set.size());
      for (const RelationInstance& inst : dev_set) {
        pred.push_back(predict(m, inst).label);
      }
      el.has_dev = true;
      el.dev_metric = evaluate(m.schema, dev_gold, pred).aggregate;
      el.improved = el.dev_metric > best_metric;
      if (el.improved) {
        best_metric = el.dev_metric;
        best = m;
        res.best_epoch = epoch;
        stale = 0;
      } else {
        ++stale;
      }
    }
    if (log) {
      nlohmann::json j{{"epoch", el.epoch}, {"mean_loss", el.mean_loss}};
      if (el.has_dev) {
        j["dev_metric"] = el.dev_metric;
        j["improved"] = el.improved;
      }
      *log << j.dump() << "\n";
    }
    res.log.push_back(el);
    res.epochs_run = epoch;
    if (!dev_set.empty() && stale >= stop_after) break;
  }

  if (!dev_set.empty()) {
    m = best;
    res.best_metric = best_metric;
  }
  return res;
}

namespace {

// Named view over one parameter block's flat storage.
struct BlockRef {
  std::string name;
  bool frozen = false;
  std::span<double> data;
  std::span<const double> grad;  // summed analytic gradient, same layout
};

struct CollectVisitor final : ParamVisitor {
  std::vector<MatParam*> mats;
  std::vector<VecParam*> vecs;
  std::vector<std::pair<bool, std::size_t>> order;  // (is_mat, index)
  void mat(MatParam& p) override {
    order.emplace_back(true, mats.size());
    mats.push_back(&p);
  }
  void vec(VecParam& p) override {
    order.emplace_back(false, vecs.size());
    vecs.push_back(&p);
  }
};

}  // namespace

GradCheckResult gradcheck(ModelParams& m,
                          std::span<const RelationInstance> insts, Rng& rng,
                          int samples_per_block, double step) {
  if (insts.empty()) throw DataError("gradcheck: no instances");
  std::vector<int> gold;
  for (const RelationInstance& inst : insts) {
    gold.push_back(m.schema.index_of(inst.label));
  }

  auto total_loss = [&]() {
    double sum = 0;
    for (std::size_t i = 0; i < insts.size(); ++i) {
      Tape tape;
      sum += build_loss(tape, m, insts[i], gold[i]).val()[0];
    }
    return sum;
  };

  // Analytic gradient of the summed loss, accumulated across instances.
  std::unordered_map<const MatParam*, Mat> gmat;
  std::unordered_map<const VecParam*, Vec> gvec;
  for (std::size_t i = 0; i < insts.size(); ++i) {
    Tape tape;
    const Value loss = build_loss(tape, m, insts[i], gold[i]);
    const Gradients grads = tape.backward(loss);
    CollectVisitor cv;
    visit_tuned(m, cv);
    for (MatParam* p : cv.mats) {
      auto [it, fresh] = gmat.emplace(p, Mat(p->value.rows(), p->value.cols()));
      const Mat& g = grads.of(*p);
      auto dst = it->second.raw();
      auto src = g.raw();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
    for (VecParam* p : cv.vecs) {
      auto [it, fresh] = gvec.emplace(p, Vec(p->value.dim()));
      const Vec& g = grads.of(*p);
      for (int k = 0; k < g.dim(); ++k) it->second[k] += g[k];
    }
  }

  CollectVisitor all;
  {
    struct AllVisitor final : ParamVisitor {
      CollectVisitor& cv;
      explicit AllVisitor(CollectVisitor& c) : cv(c) {}
      void mat(MatParam& p) override { cv.mat(p); }
      void vec(VecParam& p) override { cv.vec(p); }
    } av(all);
    visit_all(m, av);
  }

  GradCheckResult res;
  for (auto [is_mat, idx] : all.order) {
    BlockRef blk;
    if (is_mat) {
      MatParam* p = all.mats[idx];
      blk.name = p->name;
      blk.frozen = p->frozen;
      blk.data = p->value.raw();
      if (!p->frozen) blk.grad = gmat.at(p).raw();
    } else {
      VecParam* p = all.vecs[idx];
      blk.name = p->name;
      blk.frozen = p->frozen;
      blk.data = p->value.span();
      if (!p->frozen) blk.grad = gvec.at(p).span();
    }

    BlockReport rep;
    rep.name = blk.name;
    if (blk.frozen) {
      rep.skipped = true;
      res.blocks.push_back(std::move(rep));
      continue;
    }

    const std::size_t numel = blk.data.size();
    std::vector<std::size_t> coords(numel);
    for (std::size_t i = 0; i < numel; ++i) coords[i] = i;
    if (numel > static_cast<std::size_t>(samples_per_block)) {
      rng.shuffle(coords);
      coords.resize(static_cast<std::size_t>(samples_per_block));
    }

    for (std::size_t c : coords) {
      const double saved = blk.data[c];
      blk.data[c] = saved + step;
      const double up = total_loss();
      blk.data[c] = saved - step;
      const double down = total_loss();
      blk.data[c] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = blk.grad[c];
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), 1e-6});
      const double rel = std::abs(analytic - numeric) / denom;
      rep.max_rel_err = std::max(rep.max_rel_err, rel);
      ++rep.checked;
    }
    res.max_rel_err = std::max(res.max_rel_err, rep.max_rel_err);
    res.blocks.push_back(std::move(rep));
  }
  return res;
}

}  // namespace relclass
