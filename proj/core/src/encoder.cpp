#include "relclass/encoder.hpp"

#include "relclass/errors.hpp"

namespace relclass {

LstmParams make_lstm_params(const std::string& prefix, int hidden, int input) {
  if (hidden <= 0 || input <= 0) {
    throw DimensionError("make_lstm_params: hidden " + std::to_string(hidden) +
                         ", input " + std::to_string(input));
  }
  const int in = hidden + input;
  LstmParams p;
  p.wi = {prefix + ".wi", Mat(hidden, in)};
  p.wf = {prefix + ".wf", Mat(hidden, in)};
  p.wo = {prefix + ".wo", Mat(hidden, in)};
  p.wc = {prefix + ".wc", Mat(hidden, in)};
  p.bi = {prefix + ".bi", Vec(hidden)};
  p.bf = {prefix + ".bf", Vec(hidden)};
  p.bo = {prefix + ".bo", Vec(hidden)};
  p.bc = {prefix + ".bc", Vec(hidden)};
  return p;
}

ProjectionParams make_projection_params(const std::string& prefix, int out_dim,
                                        int in_dim) {
  if (out_dim <= 0 || in_dim <= 0) {
    throw DimensionError("make_projection_params: out " +
                         std::to_string(out_dim) + ", in " +
                         std::to_string(in_dim));
  }
  ProjectionParams p;
  p.w1 = {prefix + ".w1", Mat(out_dim, in_dim)};
  p.b1 = {prefix + ".b1", Vec(out_dim)};
  return p;
}

LstmStepValues lstm_step(Tape& tape, LstmParams& p, Value h_prev, Value c_prev,
                         Value x) {
  Value z = tape.concat(h_prev, x);
  LstmStepValues s;
  s.i = tape.sigmoid(tape.affine(p.wi, z, p.bi));
  s.f = tape.sigmoid(tape.affine(p.wf, z, p.bf));
  s.o = tape.sigmoid(tape.affine(p.wo, z, p.bo));
  s.cand = tape.tanh(tape.affine(p.wc, z, p.bc));
  s.c = tape.add(tape.hadamard(s.f, c_prev), tape.hadamard(s.i, s.cand));
  s.h = tape.hadamard(s.o, tape.tanh(s.c));
  return s;
}

std::vector<Value> encode(Tape& tape, std::span<const Value> xs,
                          LstmParams& fwd, LstmParams& bwd,
                          ProjectionParams& proj) {
  if (xs.empty()) throw DimensionError("encode: empty sequence");
  const std::size_t n = xs.size();

  std::vector<Value> left(n), right(n);
  Value h = tape.input(Vec(fwd.hidden()));
  Value c = tape.input(Vec(fwd.hidden()));
  for (std::size_t t = 0; t < n; ++t) {
    LstmStepValues s = lstm_step(tape, fwd, h, c, xs[t]);
    h = s.h;
    c = s.c;
    left[t] = s.h;
  }
  h = tape.input(Vec(bwd.hidden()));
  c = tape.input(Vec(bwd.hidden()));
  for (std::size_t t = n; t-- > 0;) {
    LstmStepValues s = lstm_step(tape, bwd, h, c, xs[t]);
    h = s.h;
    c = s.c;
    right[t] = s.h;
  }

  std::vector<Value> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    out[t] = tape.tanh(
        tape.affine(proj.w1, tape.concat(left[t], right[t]), proj.b1));
  }
  return out;
}

}  // namespace relclass
