#ifndef SASQ_LINALG_HPP
#define SASQ_LINALG_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace sasq {

using Vec = std::vector<double>;

// Dense row-major matrix. Small enough here that hand-rolled loops beat
// pulling in a linear algebra package.
struct Mat {
  int rows = 0;
  int cols = 0;
  Vec a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
  double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
};

inline double dot(const double* x, const double* y, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

inline double dot(const Vec& x, const Vec& y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
  return dot(x.data(), y.data(), static_cast<int>(x.size()));
}

// y = W x
inline void matvec(const Mat& W, const Vec& x, Vec& y) {
  if (static_cast<int>(x.size()) != W.cols) throw std::invalid_argument("matvec: size mismatch");
  y.resize(W.rows);
  for (int r = 0; r < W.rows; ++r) y[r] = dot(W.row(r), x.data(), W.cols);
}

inline Vec matvec(const Mat& W, const Vec& x) {
  Vec y;
  matvec(W, x, y);
  return y;
}

// y += W^T u   (accumulating transpose apply, used by backward passes)
inline void matvec_t_acc(const Mat& W, const Vec& u, Vec& y) {
  if (static_cast<int>(u.size()) != W.rows) throw std::invalid_argument("matvec_t_acc: size mismatch");
  y.resize(W.cols, 0.0);
  for (int r = 0; r < W.rows; ++r) {
    const double ur = u[r];
    if (ur == 0.0) continue;
    const double* wr = W.row(r);
    for (int c = 0; c < W.cols; ++c) y[c] += ur * wr[c];
  }
}

// A += u v^T
inline void add_outer(Mat& A, const Vec& u, const Vec& v) {
  if (static_cast<int>(u.size()) != A.rows || static_cast<int>(v.size()) != A.cols)
    throw std::invalid_argument("add_outer: size mismatch");
  for (int r = 0; r < A.rows; ++r) {
    double* ar = A.row(r);
    const double ur = u[r];
    for (int c = 0; c < A.cols; ++c) ar[c] += ur * v[c];
  }
}

inline void add_scaled(Vec& y, const Vec& x, double s) {
  if (y.size() != x.size()) throw std::invalid_argument("add_scaled: size mismatch");
  for (size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

}  // namespace sasq

#endif
