#include "relclass/tape.hpp"

#include <algorithm>
#include <cmath>

#include "relclass/errors.hpp"

namespace relclass {

namespace detail {
double tanh_backward_scale = 1.0;
}  // namespace detail

const Mat& Gradients::of(const MatParam& p) const {
  auto it = mat_.find(&p);
  if (it == mat_.end()) {
    throw NumericError("gradient requested for untracked parameter '" + p.name + "'");
  }
  return it->second;
}

const Vec& Gradients::of(const VecParam& p) const {
  auto it = vec_.find(&p);
  if (it == vec_.end()) {
    throw NumericError("gradient requested for untracked parameter '" + p.name + "'");
  }
  return it->second;
}

bool Gradients::all_finite() const {
  for (const auto& [p, g] : mat_) {
    if (!relclass::all_finite(g)) return false;
  }
  for (const auto& [p, g] : vec_) {
    if (!relclass::all_finite(g)) return false;
  }
  return true;
}

Value Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Value(this, static_cast<int>(nodes_.size()) - 1);
}

int Tape::index_of(Value v, const char* what) const {
  if (v.tape_ != this || v.idx_ < 0 ||
      v.idx_ >= static_cast<int>(nodes_.size())) {
    throw NumericError(std::string(what) + ": value is not on this tape");
  }
  return v.idx_;
}

std::vector<const Vec*> Tape::gather(std::span<const Value> xs, const char* op) const {
  if (xs.empty()) throw DimensionError(std::string(op) + ": empty operand set");
  std::vector<const Vec*> vals;
  vals.reserve(xs.size());
  const int dim = val(xs[0]).dim();
  for (Value v : xs) {
    const Vec& x = nodes_[static_cast<std::size_t>(index_of(v, op))].out;
    if (x.dim() != dim) {
      throw DimensionError(std::string(op) + ": operand dims " +
                           std::to_string(dim) + " vs " + std::to_string(x.dim()));
    }
    vals.push_back(&x);
  }
  return vals;
}

Value Tape::input(Vec v) {
  Node n;
  n.op = Op::kInput;
  n.out = std::move(v);
  return push(std::move(n));
}

Value Tape::param(VecParam& p) {
  if (p.frozen) return input(p.value);
  track(p);
  Node n;
  n.op = Op::kParam;
  n.out = p.value;
  n.vec = &p;
  return push(std::move(n));
}

Value Tape::lookup(MatParam& table, int row) {
  if (row < 0 || row >= table.value.rows()) {
    throw DimensionError("lookup: row " + std::to_string(row) + " outside table '" +
                         table.name + "' with " + std::to_string(table.value.rows()) +
                         " rows");
  }
  Vec v(table.value.cols());
  const auto r = table.value.row(row);
  for (int j = 0; j < table.value.cols(); ++j) v[j] = r[static_cast<std::size_t>(j)];
  if (table.frozen) return input(std::move(v));
  track(table);
  Node n;
  n.op = Op::kLookup;
  n.out = std::move(v);
  n.mat = &table;
  n.row = row;
  return push(std::move(n));
}

void Tape::track(MatParam& p) {
  if (p.frozen) return;
  if (tracked_mat_set_.insert(&p).second) tracked_mat_.push_back(&p);
}

void Tape::track(VecParam& p) {
  if (p.frozen) return;
  if (tracked_vec_set_.insert(&p).second) tracked_vec_.push_back(&p);
}

Value Tape::affine(MatParam& w, Value x, VecParam& b) {
  const int xi = index_of(x, "affine");
  if (!w.frozen) track(w);
  if (!b.frozen) track(b);
  Node n;
  n.op = Op::kAffine;
  n.out = relclass::affine(w.value, nodes_[static_cast<std::size_t>(xi)].out, b.value);
  n.args = {xi};
  n.mat = &w;
  n.vec = &b;
  return push(std::move(n));
}

Value Tape::matvec(MatParam& w, Value x) {
  const int xi = index_of(x, "matvec");
  if (!w.frozen) track(w);
  Node n;
  n.op = Op::kMatVec;
  n.out = relclass::matvec(w.value, nodes_[static_cast<std::size_t>(xi)].out);
  n.args = {xi};
  n.mat = &w;
  return push(std::move(n));
}

Value Tape::sigmoid(Value x) {
  const int xi = index_of(x, "sigmoid");
  Node n;
  n.op = Op::kSigmoid;
  n.out = relclass::sigmoid(nodes_[static_cast<std::size_t>(xi)].out);
  n.args = {xi};
  return push(std::move(n));
}

Value Tape::tanh(Value x) {
  const int xi = index_of(x, "tanh");
  Node n;
  n.op = Op::kTanh;
  n.out = relclass::tanh(nodes_[static_cast<std::size_t>(xi)].out);
  n.args = {xi};
  return push(std::move(n));
}

Value Tape::hadamard(Value a, Value b) {
  const int ai = index_of(a, "hadamard");
  const int bi = index_of(b, "hadamard");
  Node n;
  n.op = Op::kHadamard;
  n.out = relclass::hadamard(nodes_[static_cast<std::size_t>(ai)].out,
                             nodes_[static_cast<std::size_t>(bi)].out);
  n.args = {ai, bi};
  return push(std::move(n));
}

Value Tape::add(Value a, Value b) {
  const int ai = index_of(a, "add");
  const int bi = index_of(b, "add");
  Node n;
  n.op = Op::kAdd;
  n.out = relclass::add(nodes_[static_cast<std::size_t>(ai)].out,
                        nodes_[static_cast<std::size_t>(bi)].out);
  n.args = {ai, bi};
  return push(std::move(n));
}

Value Tape::concat(Value a, Value b) {
  const Value xs[] = {a, b};
  return concat(xs);
}

Value Tape::concat(std::span<const Value> xs) {
  if (xs.empty()) throw DimensionError("concat: empty operand set");
  Node n;
  n.op = Op::kConcat;
  int total = 0;
  n.args.reserve(xs.size());
  for (Value v : xs) {
    const int i = index_of(v, "concat");
    n.args.push_back(i);
    total += nodes_[static_cast<std::size_t>(i)].out.dim();
  }
  Vec out(total);
  int at = 0;
  for (int i : n.args) {
    const Vec& x = nodes_[static_cast<std::size_t>(i)].out;
    for (int j = 0; j < x.dim(); ++j) out[at + j] = x[j];
    at += x.dim();
  }
  n.out = std::move(out);
  return push(std::move(n));
}

Value Tape::scale(Value x, double c) {
  const int xi = index_of(x, "scale");
  Node n;
  n.op = Op::kScale;
  n.out = relclass::scale(nodes_[static_cast<std::size_t>(xi)].out, c);
  n.args = {xi};
  n.c = c;
  return push(std::move(n));
}

Value Tape::dot(Value a, Value b) {
  const int ai = index_of(a, "dot");
  const int bi = index_of(b, "dot");
  Node n;
  n.op = Op::kDot;
  n.out = Vec{relclass::dot(nodes_[static_cast<std::size_t>(ai)].out,
                            nodes_[static_cast<std::size_t>(bi)].out)};
  n.args = {ai, bi};
  return push(std::move(n));
}

Value Tape::max_pool(std::span<const Value> xs) {
  auto vals = gather(xs, "max_pool");
  Node n;
  n.op = Op::kMaxPool;
  n.args.reserve(xs.size());
  for (Value v : xs) n.args.push_back(v.idx_);
  Vec out = *vals[0];
  for (std::size_t k = 1; k < vals.size(); ++k) {
    for (int j = 0; j < out.dim(); ++j) out[j] = std::max(out[j], (*vals[k])[j]);
  }
  n.out = std::move(out);
  return push(std::move(n));
}

Value Tape::min_pool(std::span<const Value> xs) {
  auto vals = gather(xs, "min_pool");
  Node n;
  n.op = Op::kMinPool;
  n.args.reserve(xs.size());
  for (Value v : xs) n.args.push_back(v.idx_);
  Vec out = *vals[0];
  for (std::size_t k = 1; k < vals.size(); ++k) {
    for (int j = 0; j < out.dim(); ++j) out[j] = std::min(out[j], (*vals[k])[j]);
  }
  n.out = std::move(out);
  return push(std::move(n));
}

Value Tape::avg_pool(std::span<const Value> xs) {
  auto vals = gather(xs, "avg_pool");
  Node n;
  n.op = Op::kAvgPool;
  n.args.reserve(xs.size());
  for (Value v : xs) n.args.push_back(v.idx_);
  Vec out(vals[0]->dim());
  for (const Vec* v : vals) {
    for (int j = 0; j < out.dim(); ++j) out[j] += (*v)[j];
  }
  const double inv = 1.0 / static_cast<double>(vals.size());
  for (int j = 0; j < out.dim(); ++j) out[j] *= inv;
  n.out = std::move(out);
  return push(std::move(n));
}

Value Tape::rss_pool(std::span<const Value> xs) {
  auto vals = gather(xs, "rss_pool");
  Node n;
  n.op = Op::kRssPool;
  n.args.reserve(xs.size());
  for (Value v : xs) n.args.push_back(v.idx_);
  Vec out(vals[0]->dim());
  for (const Vec* v : vals) {
    for (int j = 0; j < out.dim(); ++j) out[j] += (*v)[j] * (*v)[j];
  }
  for (int j = 0; j < out.dim(); ++j) out[j] = std::sqrt(out[j]);
  n.out = std::move(out);
  return push(std::move(n));
}

Value Tape::softmax_xent(Value logits, int gold) {
  const int li = index_of(logits, "softmax_xent");
  const Vec& z = nodes_[static_cast<std::size_t>(li)].out;
  if (gold < 0 || gold >= z.dim()) {
    throw DimensionError("softmax_xent: gold index " + std::to_string(gold) +
                         " outside " + std::to_string(z.dim()) + " classes");
  }
  double zmax = z[0];
  for (int j = 1; j < z.dim(); ++j) zmax = std::max(zmax, z[j]);
  double denom = 0.0;
  Vec p(z.dim());
  for (int j = 0; j < z.dim(); ++j) {
    p[j] = std::exp(z[j] - zmax);
    denom += p[j];
  }
  for (int j = 0; j < z.dim(); ++j) p[j] /= denom;
  Node n;
  n.op = Op::kSoftmaxXent;
  n.out = Vec{-std::log(p[gold])};
  n.args = {li};
  n.gold = gold;
  n.aux = std::move(p);
  return push(std::move(n));
}

const Vec& Tape::softmax_of(Value xent) const {
  const int i = index_of(xent, "softmax_of");
  const Node& n = nodes_[static_cast<std::size_t>(i)];
  if (n.op != Op::kSoftmaxXent) {
    throw NumericError("softmax_of: node is not a softmax_xent node");
  }
  return n.aux;
}

const Vec& Tape::val(Value v) const {
  return nodes_[static_cast<std::size_t>(index_of(v, "val"))].out;
}

Gradients Tape::backward(Value loss) const {
  const int li = index_of(loss, "backward");
  if (nodes_[static_cast<std::size_t>(li)].out.dim() != 1) {
    throw NumericError("backward: loss has dim " +
                       std::to_string(nodes_[static_cast<std::size_t>(li)].out.dim()) +
                       ", expected a scalar");
  }

  Gradients g;
  for (const MatParam* p : tracked_mat_) {
    g.mat_.emplace(p, Mat(p->value.rows(), p->value.cols()));
  }
  for (const VecParam* p : tracked_vec_) {
    g.vec_.emplace(p, Vec(p->value.dim()));
  }

  std::vector<Vec> adj(static_cast<std::size_t>(li) + 1);
  auto sink = [&](int i) -> Vec& {
    Vec& a = adj[static_cast<std::size_t>(i)];
    if (a.dim() == 0) a = Vec(nodes_[static_cast<std::size_t>(i)].out.dim());
    return a;
  };
  sink(li)[0] = 1.0;

  for (int i = li; i >= 0; --i) {
    const Vec& d = adj[static_cast<std::size_t>(i)];
    if (d.dim() == 0) continue;  // not on any path to the loss
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kParam:
        if (!n.vec->frozen) {
          Vec& gp = g.vec_.at(n.vec);
          for (int j = 0; j < d.dim(); ++j) gp[j] += d[j];
        }
        break;
      case Op::kLookup:
        if (!n.mat->frozen) {
          Mat& gm = g.mat_.at(n.mat);
          for (int j = 0; j < d.dim(); ++j) gm(n.row, j) += d[j];
        }
        break;
      case Op::kAffine:
      case Op::kMatVec: {
        const Vec& x = nodes_[static_cast<std::size_t>(n.args[0])].out;
        Vec& gx = sink(n.args[0]);
        const Mat& w = n.mat->value;
        for (int r = 0; r < w.rows(); ++r) {
          const double dr = d[r];
          if (dr == 0.0) continue;
          const auto row = w.row(r);
          for (int c = 0; c < w.cols(); ++c) gx[c] += row[static_cast<std::size_t>(c)] * dr;
        }
        if (!n.mat->frozen) {
          Mat& gw = g.mat_.at(n.mat);
          for (int r = 0; r < w.rows(); ++r) {
            const double dr = d[r];
            if (dr == 0.0) continue;
            for (int c = 0; c < w.cols(); ++c) gw(r, c) += dr * x[c];
          }
        }
        if (n.op == Op::kAffine && !n.vec->frozen) {
          Vec& gb = g.vec_.at(n.vec);
          for (int j = 0; j < d.dim(); ++j) gb[j] += d[j];
        }
        break;
      }
      case Op::kSigmoid: {
        Vec& gx = sink(n.args[0]);
        for (int j = 0; j < d.dim(); ++j) {
          const double s = n.out[j];
          gx[j] += d[j] * s * (1.0 - s);
        }
        break;
      }
      case Op::kTanh: {
        Vec& gx = sink(n.args[0]);
        for (int j = 0; j < d.dim(); ++j) {
          const double t = n.out[j];
          gx[j] += detail::tanh_backward_scale * d[j] * (1.0 - t * t);
        }
        break;
      }
      case Op::kHadamard: {
        const Vec& a = nodes_[static_cast<std::size_t>(n.args[0])].out;
        const Vec& b = nodes_[static_cast<std::size_t>(n.args[1])].out;
        Vec& ga = sink(n.args[0]);
        Vec& gb = sink(n.args[1]);
        for (int j = 0; j < d.dim(); ++j) {
          ga[j] += d[j] * b[j];
          gb[j] += d[j] * a[j];
        }
        break;
      }
      case Op::kAdd: {
        Vec& ga = sink(n.args[0]);
        Vec& gb = sink(n.args[1]);
        for (int j = 0; j < d.dim(); ++j) {
          ga[j] += d[j];
          gb[j] += d[j];
        }
        break;
      }
      case Op::kConcat: {
        int at = 0;
        for (int ai : n.args) {
          Vec& ga = sink(ai);
          for (int j = 0; j < ga.dim(); ++j) ga[j] += d[at + j];
          at += ga.dim();
        }
        break;
      }
      case Op::kScale: {
        Vec& gx = sink(n.args[0]);
        for (int j = 0; j < d.dim(); ++j) gx[j] += n.c * d[j];
        break;
      }
      case Op::kDot: {
        const Vec& a = nodes_[static_cast<std::size_t>(n.args[0])].out;
        const Vec& b = nodes_[static_cast<std::size_t>(n.args[1])].out;
        Vec& ga = sink(n.args[0]);
        Vec& gb = sink(n.args[1]);
        for (int j = 0; j < a.dim(); ++j) {
          ga[j] += d[0] * b[j];
          gb[j] += d[0] * a[j];
        }
        break;
      }
      case Op::kMaxPool:
      case Op::kMinPool: {
        // Ties route to the first operand attaining the extremum.
        for (int j = 0; j < d.dim(); ++j) {
          for (int ai : n.args) {
            if (nodes_[static_cast<std::size_t>(ai)].out[j] == n.out[j]) {
              sink(ai)[j] += d[j];
              break;
            }
          }
        }
        break;
      }
      case Op::kAvgPool: {
        const double inv = 1.0 / static_cast<double>(n.args.size());
        for (int ai : n.args) {
          Vec& ga = sink(ai);
          for (int j = 0; j < d.dim(); ++j) ga[j] += d[j] * inv;
        }
        break;
      }
      case Op::kRssPool: {
        // d sqrt(sum x^2) / dx = x / out; zero subgradient where out == 0.
        for (int ai : n.args) {
          const Vec& x = nodes_[static_cast<std::size_t>(ai)].out;
          Vec& ga = sink(ai);
          for (int j = 0; j < d.dim(); ++j) {
            if (n.out[j] != 0.0) ga[j] += d[j] * x[j] / n.out[j];
          }
        }
        break;
      }
      case Op::kSoftmaxXent: {
        const Vec& p = n.aux;
        Vec& gz = sink(n.args[0]);
        for (int j = 0; j < p.dim(); ++j) {
          gz[j] += d[0] * (p[j] - (j == n.gold ? 1.0 : 0.0));
        }
        break;
      }
    }
  }
  return g;
}

}  // namespace relclass
