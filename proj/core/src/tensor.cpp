#include "relclass/tensor.hpp"

#include <cmath>
#include <string>

#include "relclass/errors.hpp"

namespace relclass {

namespace {

void require_same_dim(const Vec& a, const Vec& b, const char* op) {
  if (a.dim() != b.dim()) {
    throw DimensionError(std::string(op) + ": operand dims " +
                         std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
  }
}

}  // namespace

Mat Mat::identity(int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vec affine(const Mat& w, const Vec& x, const Vec& b) {
  if (w.cols() != x.dim() || b.dim() != w.rows()) {
    throw DimensionError("affine: W is " + std::to_string(w.rows()) + "x" +
                         std::to_string(w.cols()) + ", x dim " +
                         std::to_string(x.dim()) + ", b dim " +
                         std::to_string(b.dim()));
  }
  Vec out(w.rows());
  for (int i = 0; i < w.rows(); ++i) {
    double s = b[i];
    const auto row = w.row(i);
    for (int j = 0; j < w.cols(); ++j) s += row[static_cast<std::size_t>(j)] * x[j];
    out[i] = s;
  }
  return out;
}

Vec matvec(const Mat& w, const Vec& x) {
  if (w.cols() != x.dim()) {
    throw DimensionError("matvec: W is " + std::to_string(w.rows()) + "x" +
                         std::to_string(w.cols()) + ", x dim " +
                         std::to_string(x.dim()));
  }
  Vec out(w.rows());
  for (int i = 0; i < w.rows(); ++i) {
    double s = 0.0;
    const auto row = w.row(i);
    for (int j = 0; j < w.cols(); ++j) s += row[static_cast<std::size_t>(j)] * x[j];
    out[i] = s;
  }
  return out;
}

Vec sigmoid(const Vec& x) {
  Vec out(x.dim());
  for (int i = 0; i < x.dim(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x[i]));
  return out;
}

Vec tanh(const Vec& x) {
  Vec out(x.dim());
  for (int i = 0; i < x.dim(); ++i) out[i] = std::tanh(x[i]);
  return out;
}

Vec hadamard(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "hadamard");
  Vec out(a.dim());
  for (int i = 0; i < a.dim(); ++i) out[i] = a[i] * b[i];
  return out;
}

Vec add(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "add");
  Vec out(a.dim());
  for (int i = 0; i < a.dim(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec concat(const Vec& a, const Vec& b) {
  Vec out(a.dim() + b.dim());
  for (int i = 0; i < a.dim(); ++i) out[i] = a[i];
  for (int i = 0; i < b.dim(); ++i) out[a.dim() + i] = b[i];
  return out;
}

std::pair<Vec, Vec> split(const Vec& v, int at) {
  if (at < 0 || at > v.dim()) {
    throw DimensionError("split: at " + std::to_string(at) + " outside dim " +
                         std::to_string(v.dim()));
  }
  Vec a(at), b(v.dim() - at);
  for (int i = 0; i < at; ++i) a[i] = v[i];
  for (int i = at; i < v.dim(); ++i) b[i - at] = v[i];
  return {std::move(a), std::move(b)};
}

double dot(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (int i = 0; i < a.dim(); ++i) s += a[i] * b[i];
  return s;
}

Vec scale(const Vec& a, double c) {
  Vec out(a.dim());
  for (int i = 0; i < a.dim(); ++i) out[i] = a[i] * c;
  return out;
}

bool all_finite(const Vec& v) {
  for (int i = 0; i < v.dim(); ++i) {
    if (!std::isfinite(v[i])) return false;
  }
  return true;
}

bool all_finite(const Mat& m) {
  for (double x : m.raw()) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace relclass
