#pragma once

#include <span>
#include <string>

#include "relclass/tape.hpp"

namespace relclass {

// Inclusive token spans of the two target entities, former strictly before
// latter and non-overlapping.
struct EntitySpans {
  int former_start = 0;
  int former_end = 0;
  int latter_start = 0;
  int latter_end = 0;

  bool operator==(const EntitySpans&) const = default;
};

// Throws DataError unless 0 <= fs <= fe < ls <= le < n.
void validate(const EntitySpans& spans, int n);

// Half-open token range.
struct Range {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  bool empty() const { return begin >= end; }
  bool operator==(const Range&) const = default;
};

// The five parts partition [0, n) in order.
struct Segments {
  Range before, former, middle, latter, after;
};

Segments segment(int n, const EntitySpans& spans);

// max ⊕ min ⊕ avg ⊕ "std" over one part; dim 4*nh. The "std" slot is
// literally sqrt(sum of squares): no mean subtraction and no 1/K factor.
// An empty part pools to the zero vector so the output dim is constant.
Value pool(Tape& tape, std::span<const Value> part, int nh);

Value pool_range(Tape& tape, std::span<const Value> h, Range r, int nh);

// Ablation switches for the three context parts. Entity parts always stay.
struct ContextFlags {
  bool before = true;
  bool middle = true;
  bool after = true;

  bool operator==(const ContextFlags&) const = default;
};

// r_before ⊕ r_former ⊕ r_middle ⊕ r_latter ⊕ r_after in this fixed order,
// disabled context parts omitted; dim 20*nh with everything enabled.
Value penultimate(Tape& tape, std::span<const Value> h, const Segments& segs,
                  const ContextFlags& flags, int nh);

// Relation scorer; softmax over W2 rows, no bias term.
struct OutputParams {
  MatParam w2;
};

OutputParams make_output_params(const std::string& name, int n_rel,
                                int penultimate_dim);

// Softmax with max-logit subtraction.
Vec softmax(const Vec& logits);

// Ties resolve to the lowest index.
int argmax(const Vec& p);

// p = softmax(W2 x), non-traced form for prediction.
Vec score(const Vec& x_penul, const OutputParams& out);

}  // namespace relclass
