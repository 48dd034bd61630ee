#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "relclass/encoder.hpp"
#include "relclass/relation_head.hpp"
#include "relclass/rng.hpp"
#include "relclass/sdp.hpp"
#include "relclass/tape.hpp"

namespace {

using namespace relclass;

// Default-config shapes: 400-dim token embeddings, 200 hidden units per
// direction, 200-dim projected states, 19 relation types.
constexpr int kTok = 400;
constexpr int kLstm = 200;
constexpr int kH = 200;

void fill(Rng& rng, Mat& m) {
  for (double& v : m.raw()) v = rng.uniform(-0.1, 0.1);
}

void fill(Rng& rng, Vec& v) {
  for (int i = 0; i < v.dim(); ++i) v[i] = rng.uniform(-0.1, 0.1);
}

struct Stack {
  LstmParams fwd = make_lstm_params("fwd", kLstm, kTok);
  LstmParams bwd = make_lstm_params("bwd", kLstm, kTok);
  ProjectionParams proj = make_projection_params("proj", kH, 2 * kLstm);
  OutputParams out = make_output_params("w2", 19, 20 * kH);

  Stack() {
    Rng rng(1);
    for (MatParam* m : {&fwd.wi, &fwd.wf, &fwd.wo, &fwd.wc, &bwd.wi, &bwd.wf,
                        &bwd.wo, &bwd.wc, &proj.w1, &out.w2}) {
      fill(rng, m->value);
    }
    for (VecParam* v : {&fwd.bi, &fwd.bf, &fwd.bo, &fwd.bc, &bwd.bi, &bwd.bf,
                        &bwd.bo, &bwd.bc, &proj.b1}) {
      fill(rng, v->value);
    }
  }
};

std::vector<Vec> random_vectors(Rng& rng, int n, int dim) {
  std::vector<Vec> xs;
  xs.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Vec x(dim);
    fill(rng, x);
    xs.push_back(std::move(x));
  }
  return xs;
}

std::vector<Value> as_inputs(Tape& t, const std::vector<Vec>& vs) {
  std::vector<Value> xs;
  xs.reserve(vs.size());
  for (const Vec& v : vs) xs.push_back(t.input(v));
  return xs;
}

// Single-token entities at the quarter points.
EntitySpans spread_spans(int n) {
  return {n / 4, n / 4, (3 * n) / 4, (3 * n) / 4};
}

void EncodeForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Stack s;
  Rng rng(2);
  const std::vector<Vec> tokens = random_vectors(rng, n, kTok);
  for (auto _ : state) {
    Tape t;
    const std::vector<Value> xs = as_inputs(t, tokens);
    const std::vector<Value> h = encode(t, xs, s.fwd, s.bwd, s.proj);
    benchmark::DoNotOptimize(h.back().val()[0]);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(EncodeForward)->Arg(8)->Arg(32)->Arg(128);

// The full per-instance training step minus the optimizer: encode, pool,
// score, cross-entropy, reverse sweep.
void LossForwardBackward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Stack s;
  Rng rng(3);
  const std::vector<Vec> tokens = random_vectors(rng, n, kTok);
  const Segments segs = segment(n, spread_spans(n));
  for (auto _ : state) {
    Tape t;
    const std::vector<Value> xs = as_inputs(t, tokens);
    const std::vector<Value> h = encode(t, xs, s.fwd, s.bwd, s.proj);
    const Value x = penultimate(t, h, segs, ContextFlags{}, kH);
    const Value loss = t.softmax_xent(t.matvec(s.out.w2, x), 3);
    const Gradients g = t.backward(loss);
    benchmark::DoNotOptimize(g.of(s.out.w2)(0, 0));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(LossForwardBackward)->Arg(8)->Arg(32)->Arg(128);

// Pooling layer in isolation: five parts, four pools each, one concat.
void PenultimatePool(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(4);
  const std::vector<Vec> states = random_vectors(rng, n, kH);
  const Segments segs = segment(n, spread_spans(n));
  for (auto _ : state) {
    Tape t;
    const std::vector<Value> h = as_inputs(t, states);
    const Value x = penultimate(t, h, segs, ContextFlags{}, kH);
    benchmark::DoNotOptimize(x.val()[0]);
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(PenultimatePool)->Arg(32)->Arg(256);

DepSentence random_tree(Rng& rng, int n) {
  DepSentence s;
  s.id = "bench";
  for (int i = 0; i < n; ++i) {
    DepToken t;
    t.form = "w" + std::to_string(i);
    t.head = i == 0 ? 0 : static_cast<int>(rng.below(static_cast<std::uint64_t>(i))) + 1;
    s.tokens.push_back(std::move(t));
  }
  return s;
}

void ShortestDepPath(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(5);
  const DepSentence s = random_tree(rng, n);
  const int a = n / 5;
  const int b = (4 * n) / 5;
  for (auto _ : state) {
    const std::vector<int> path = shortest_dep_path(s, a, b);
    benchmark::DoNotOptimize(path.size());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(ShortestDepPath)->Arg(16)->Arg(128)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
