#pragma once

#include <span>
#include <string>
#include <vector>

#include "relclass/tape.hpp"

namespace relclass {

// One LSTM direction: four gate matrices over (h_prev ⊕ x) and four biases.
struct LstmParams {
  MatParam wi, wf, wo, wc;
  VecParam bi, bf, bo, bc;

  int hidden() const { return wi.value.rows(); }
  int input() const { return wi.value.cols() - wi.value.rows(); }
};

// All-zero parameter block named "<prefix>.wi" etc.
LstmParams make_lstm_params(const std::string& prefix, int hidden, int input);

struct ProjectionParams {
  MatParam w1;
  VecParam b1;
};

ProjectionParams make_projection_params(const std::string& prefix, int out_dim,
                                        int in_dim);

// Gate activations are returned alongside the new state so tests can pin
// them directly.
struct LstmStepValues {
  Value h, c, i, f, o, cand;
};

// i = σ(Wi z + bi), f = σ(Wf z + bf), o = σ(Wo z + bo), c~ = tanh(Wc z + bc),
// c = f⊙c_prev + i⊙c~, h = o⊙tanh(c), with z = h_prev ⊕ x.
// No peepholes, no forget-gate bias offset.
LstmStepValues lstm_step(Tape& tape, LstmParams& p, Value h_prev, Value c_prev,
                         Value x);

// Bidirectional unrolling from zero initial states, then the per-token
// projection h_t = tanh(W1 (h'_t ⊕ h''_t) + b1). One output per input token.
std::vector<Value> encode(Tape& tape, std::span<const Value> xs,
                          LstmParams& fwd, LstmParams& bwd,
                          ProjectionParams& proj);

}  // namespace relclass
