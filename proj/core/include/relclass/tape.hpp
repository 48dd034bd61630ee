#pragma once

#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "relclass/tensor.hpp"

namespace relclass {

// A named tensor the optimizer may update. Frozen parameters take part in
// the forward computation but never receive gradients.
struct MatParam {
  std::string name;
  Mat value;
  bool frozen = false;
};

struct VecParam {
  std::string name;
  Vec value;
  bool frozen = false;
};

class Tape;

// Handle to one recorded value on a Tape.
class Value {
 public:
  Value() = default;
  const Vec& val() const;
  int dim() const;
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Value(const Tape* t, int i) : tape_(t), idx_(i) {}
  const Tape* tape_ = nullptr;
  int idx_ = -1;
};

// Output of Tape::backward: one same-shaped gradient per tracked parameter.
// A tracked parameter with no path to the loss holds exact zeros.
class Gradients {
 public:
  const Mat& of(const MatParam& p) const;
  const Vec& of(const VecParam& p) const;
  bool tracks(const MatParam& p) const { return mat_.count(&p) != 0; }
  bool tracks(const VecParam& p) const { return vec_.count(&p) != 0; }
  bool all_finite() const;

 private:
  friend class Tape;
  std::unordered_map<const MatParam*, Mat> mat_;
  std::unordered_map<const VecParam*, Vec> vec_;
};

namespace detail {
// Test seam: scales the local derivative of the tanh primitive in backward.
// Must stay at 1.0 outside of gradient-check mutation tests.
extern double tanh_backward_scale;
}  // namespace detail

// Append-only record of a forward computation over Vec values. backward()
// replays it in exact reverse order, so gradients are deterministic and a
// parameter used at several timesteps accumulates its gradient additively.
// Single-writer; distinct tapes are independent.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Value input(Vec v);                       // constant, never differentiated
  Value param(VecParam& p);                 // whole-vector parameter
  Value lookup(MatParam& table, int row);   // one row of a table parameter

  // Registers a parameter so backward reports it (as zeros if untouched).
  // Frozen parameters are ignored.
  void track(MatParam& p);
  void track(VecParam& p);

  // Primitives. Shape mismatches throw DimensionError.
  Value affine(MatParam& w, Value x, VecParam& b);  // W x + b
  Value matvec(MatParam& w, Value x);               // W x
  Value sigmoid(Value x);
  Value tanh(Value x);
  Value hadamard(Value a, Value b);
  Value add(Value a, Value b);
  Value concat(Value a, Value b);
  Value concat(std::span<const Value> xs);
  Value scale(Value x, double c);
  Value dot(Value a, Value b);  // dim-1 output

  // Componentwise reductions over a non-empty set of same-dim values.
  Value max_pool(std::span<const Value> xs);
  Value min_pool(std::span<const Value> xs);
  Value avg_pool(std::span<const Value> xs);
  // sqrt of the componentwise sum of squares.
  Value rss_pool(std::span<const Value> xs);

  // Scalar -log softmax(logits)[gold], computed with max-logit subtraction.
  Value softmax_xent(Value logits, int gold);
  // Probabilities cached by a softmax_xent node.
  const Vec& softmax_of(Value xent) const;

  const Vec& val(Value v) const;
  std::size_t size() const { return nodes_.size(); }

  // Gradient of the scalar `loss` with respect to every tracked parameter.
  Gradients backward(Value loss) const;

 private:
  enum class Op {
    kInput,
    kParam,
    kLookup,
    kAffine,
    kMatVec,
    kSigmoid,
    kTanh,
    kHadamard,
    kAdd,
    kConcat,
    kScale,
    kDot,
    kMaxPool,
    kMinPool,
    kAvgPool,
    kRssPool,
    kSoftmaxXent,
  };

  struct Node {
    Op op;
    Vec out;
    std::vector<int> args;
    MatParam* mat = nullptr;
    VecParam* vec = nullptr;
    int row = -1;   // lookup
    int gold = -1;  // softmax_xent
    double c = 0.0;  // scale
    Vec aux;         // softmax probabilities
  };

  Value push(Node n);
  int index_of(Value v, const char* what) const;
  std::vector<const Vec*> gather(std::span<const Value> xs, const char* op) const;

  std::vector<Node> nodes_;
  std::vector<MatParam*> tracked_mat_;
  std::vector<VecParam*> tracked_vec_;
  std::unordered_set<const MatParam*> tracked_mat_set_;
  std::unordered_set<const VecParam*> tracked_vec_set_;
};

inline const Vec& Value::val() const { return tape_->val(*this); }
inline int Value::dim() const { return val().dim(); }

}  // namespace relclass
