#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace relclass {

// Dense vector of doubles. The dimension is fixed at construction.
class Vec {
 public:
  Vec() = default;
  explicit Vec(int dim, double fill = 0.0)
      : d_(static_cast<std::size_t>(dim), fill) {}
  Vec(std::initializer_list<double> xs) : d_(xs) {}

  int dim() const { return static_cast<int>(d_.size()); }
  double& operator[](int i) { return d_[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return d_[static_cast<std::size_t>(i)]; }

  std::span<double> span() { return d_; }
  std::span<const double> span() const { return d_; }

  bool operator==(const Vec&) const = default;

 private:
  std::vector<double> d_;
};

// Dense row-major matrix. Row-major is the documented layout for
// serialization and gradients.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0)
      : rows_(rows),
        cols_(cols),
        d_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols),
           fill) {}

  static Mat identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int r, int c) {
    return d_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    return d_[static_cast<std::size_t>(r) * cols_ + c];
  }

  std::span<double> row(int r) {
    return {d_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }
  std::span<const double> row(int r) const {
    return {d_.data() + static_cast<std::size_t>(r) * cols_,
            static_cast<std::size_t>(cols_)};
  }

  std::span<double> raw() { return d_; }
  std::span<const double> raw() const { return d_; }

  bool operator==(const Mat&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> d_;
};

// y = W x + b. Requires W.cols == x.dim and b.dim == W.rows.
Vec affine(const Mat& w, const Vec& x, const Vec& b);
// y = W x.
Vec matvec(const Mat& w, const Vec& x);

Vec sigmoid(const Vec& x);
Vec tanh(const Vec& x);
Vec hadamard(const Vec& a, const Vec& b);
Vec add(const Vec& a, const Vec& b);
// a first, then b.
Vec concat(const Vec& a, const Vec& b);
// Inverse of concat: splits v into (v[0:at), v[at:dim)).
std::pair<Vec, Vec> split(const Vec& v, int at);
double dot(const Vec& a, const Vec& b);
Vec scale(const Vec& a, double c);

bool all_finite(const Vec& v);
bool all_finite(const Mat& m);

}  // namespace relclass
