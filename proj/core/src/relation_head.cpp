#include "relclass/relation_head.hpp"

#include <cmath>

#include "relclass/errors.hpp"

namespace relclass {

void validate(const EntitySpans& s, int n) {
  const bool ok = 0 <= s.former_start && s.former_start <= s.former_end &&
                  s.former_end < s.latter_start &&
                  s.latter_start <= s.latter_end && s.latter_end < n;
  if (!ok) {
    throw DataError("entity spans [" + std::to_string(s.former_start) + "," +
                    std::to_string(s.former_end) + "] [" +
                    std::to_string(s.latter_start) + "," +
                    std::to_string(s.latter_end) +
                    "] invalid for sequence length " + std::to_string(n));
  }
}

Segments segment(int n, const EntitySpans& s) {
  validate(s, n);
  Segments g;
  g.before = {0, s.former_start};
  g.former = {s.former_start, s.former_end + 1};
  g.middle = {s.former_end + 1, s.latter_start};
  g.latter = {s.latter_start, s.latter_end + 1};
  g.after = {s.latter_end + 1, n};
  return g;
}

Value pool(Tape& tape, std::span<const Value> part, int nh) {
  if (part.empty()) return tape.input(Vec(4 * nh));
  const Value parts[] = {tape.max_pool(part), tape.min_pool(part),
                         tape.avg_pool(part), tape.rss_pool(part)};
  return tape.concat(parts);
}

Value pool_range(Tape& tape, std::span<const Value> h, Range r, int nh) {
  return pool(tape, h.subspan(static_cast<std::size_t>(r.begin),
                              static_cast<std::size_t>(r.size())),
              nh);
}

Value penultimate(Tape& tape, std::span<const Value> h, const Segments& segs,
                  const ContextFlags& flags, int nh) {
  std::vector<Value> parts;
  parts.reserve(5);
  if (flags.before) parts.push_back(pool_range(tape, h, segs.before, nh));
  parts.push_back(pool_range(tape, h, segs.former, nh));
  if (flags.middle) parts.push_back(pool_range(tape, h, segs.middle, nh));
  parts.push_back(pool_range(tape, h, segs.latter, nh));
  if (flags.after) parts.push_back(pool_range(tape, h, segs.after, nh));
  return tape.concat(parts);
}

OutputParams make_output_params(const std::string& name, int n_rel,
                                int penultimate_dim) {
  if (n_rel < 2) {
    throw DimensionError("output layer needs at least 2 relation types, got " +
                         std::to_string(n_rel));
  }
  return {MatParam{name, Mat(n_rel, penultimate_dim)}};
}

Vec softmax(const Vec& z) {
  if (z.dim() == 0) throw DimensionError("softmax: empty logits");
  double zmax = z[0];
  for (int j = 1; j < z.dim(); ++j) zmax = std::max(zmax, z[j]);
  Vec p(z.dim());
  double denom = 0.0;
  for (int j = 0; j < z.dim(); ++j) {
    p[j] = std::exp(z[j] - zmax);
    denom += p[j];
  }
  for (int j = 0; j < z.dim(); ++j) p[j] /= denom;
  return p;
}

int argmax(const Vec& p) {
  if (p.dim() == 0) throw DimensionError("argmax: empty vector");
  int best = 0;
  for (int j = 1; j < p.dim(); ++j) {
    if (p[j] > p[best]) best = j;
  }
  return best;
}

Vec score(const Vec& x_penul, const OutputParams& out) {
  return softmax(matvec(out.w2.value, x_penul));
}

}  // namespace relclass
