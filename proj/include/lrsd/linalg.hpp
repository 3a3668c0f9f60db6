#ifndef LRSD_LINALG_HPP
#define LRSD_LINALG_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "lrsd/errors.hpp"

namespace lrsd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline void require_finite(const Matrix& m, const char* who) {
  if (!m.allFinite()) {
    throw InputError(std::string(who) + ": input has non-finite entries");
  }
}

/// Standard-normal matrix drawn from a caller-owned generator.
inline Matrix gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) g(i, j) = normal(rng);
  return g;
}

/// Thin SVD factors, singular values sorted nonincreasing.
struct SvdFactors {
  Matrix left_vectors;     // m x k
  Vector singular_values;  // k
  Matrix right_vectors;    // n x k

  Matrix reconstruct() const {
    return left_vectors * singular_values.asDiagonal() * right_vectors.transpose();
  }
};

/// Full thin SVD. Bidiagonal divide-and-conquer for anything but tiny inputs.
inline SvdFactors full_svd(const Matrix& m) {
  require_finite(m, "full_svd");
  if (std::min(m.rows(), m.cols()) <= 16) {
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

/// Count of singular values above rel_tol * sigma_max.
inline Index numerical_rank(const Vector& singular_values, double rel_tol = 1e-8) {
  if (singular_values.size() == 0) return 0;
  const double cut = rel_tol * singular_values(0);
  Index r = 0;
  while (r < singular_values.size() && singular_values(r) > cut) ++r;
  return r;
}

inline double gram_deviation(const Matrix& u) {
  const Index k = u.cols();
  return (u.transpose() * u - Matrix::Identity(k, k)).cwiseAbs().maxCoeff();
}

/// Leading k singular triplets by randomized subspace iteration
/// (oversampling 10, two power iterations by default). Falls back to the
/// exact SVD when the sketch would cover the whole spectrum anyway.
inline SvdFactors truncated_svd(const Matrix& m, Index k, std::mt19937_64* rng = nullptr,
                                Index oversampling = 10, int power_iterations = 2) {
  require_finite(m, "truncated_svd");
  const Index minmn = std::min(m.rows(), m.cols());
  if (k < 1 || k > minmn) {
    throw ArgumentError("truncated_svd: k=" + std::to_string(k) + " out of range [1, " +
                        std::to_string(minmn) + "]");
  }
  const Index sketch = std::min(k + oversampling, minmn);
  if (sketch >= minmn) {
    SvdFactors f = full_svd(m);
    return {f.left_vectors.leftCols(k), f.singular_values.head(k), f.right_vectors.leftCols(k)};
  }

  std::mt19937_64 fallback(0x5eed5eedULL);
  std::mt19937_64& gen = rng ? *rng : fallback;

  Matrix y = m * gaussian_matrix(m.cols(), sketch, gen);
  Matrix q = Eigen::HouseholderQR<Matrix>(y).householderQ() * Matrix::Identity(m.rows(), sketch);
  for (int it = 0; it < power_iterations; ++it) {
    Matrix z = m.transpose() * q;
    z = Eigen::HouseholderQR<Matrix>(z).householderQ() * Matrix::Identity(m.cols(), sketch);
    y = m * z;
    q = Eigen::HouseholderQR<Matrix>(y).householderQ() * Matrix::Identity(m.rows(), sketch);
  }
  const Matrix b = q.transpose() * m;  // sketch x n
  Eigen::JacobiSVD<Matrix> small(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {q * small.matrixU().leftCols(k), small.singularValues().head(k),
          small.matrixV().leftCols(k)};
}

/// Singular value thresholding: prox of tau * nuclear norm at m.
inline Matrix svt(const Matrix& m, double tau) {
  require_finite(m, "svt");
  if (tau < 0) throw ArgumentError("svt: tau must be nonnegative");
  SvdFactors f = full_svd(m);
  Vector shrunk = (f.singular_values.array() - tau).max(0.0);
  return f.left_vectors * shrunk.asDiagonal() * f.right_vectors.transpose();
}

/// Elementwise soft threshold: prox of tau * l1 norm at m.
inline Matrix shrink(const Matrix& m, double tau) {
  require_finite(m, "shrink");
  if (tau < 0) throw ArgumentError("shrink: tau must be nonnegative");
  return m.array().sign() * (m.array().abs() - tau).max(0.0);
}

/// Keep the k entries of largest magnitude, zero the rest. Ties go to the
/// smallest (row, column) pair in row-major order.
inline Matrix hard_threshold_top_k(const Matrix& m, Index k) {
  require_finite(m, "hard_threshold_top_k");
  const Index total = m.rows() * m.cols();
  if (k < 0 || k > total) {
    throw ArgumentError("hard_threshold_top_k: k=" + std::to_string(k) + " exceeds " +
                        std::to_string(total) + " entries");
  }
  Matrix out = Matrix::Zero(m.rows(), m.cols());
  if (k == 0) return out;

  const Index cols = m.cols();
  std::vector<Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Index{0});
  auto value_at = [&](Index linear) { return m(linear / cols, linear % cols); };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Index a, Index b) {
    const double va = std::abs(value_at(a));
    const double vb = std::abs(value_at(b));
    if (va != vb) return va > vb;
    return a < b;
  });
  for (Index i = 0; i < k; ++i) {
    const Index r = idx[static_cast<std::size_t>(i)] / cols;
    const Index c = idx[static_cast<std::size_t>(i)] % cols;
    out(r, c) = m(r, c);
  }
  return out;
}

namespace detail {

// Pseudo-inverse of a small square matrix via SVD; singular directions below
// the tolerance are dropped rather than inverted.
inline Matrix small_pinv(const Matrix& g) {
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double tol =
      std::max(g.rows(), g.cols()) * Eigen::NumTraits<double>::epsilon() * (s.size() ? s(0) : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace detail

/// Rank-<=r approximation by bilateral random projection with Gaussian
/// sketches, power-iterated q times. Exact (up to roundoff) when
/// rank(m) <= r. A sketch producing non-finite output is redrawn up to
/// three times before failing.
inline Matrix brp_lowrank(const Matrix& m, Index r, int q, std::mt19937_64& rng) {
  require_finite(m, "brp_lowrank");
  const Index minmn = std::min(m.rows(), m.cols());
  if (r < 1 || r > minmn) {
    throw ArgumentError("brp_lowrank: rank bound " + std::to_string(r) + " out of range [1, " +
                        std::to_string(minmn) + "]");
  }
  if (q < 0) throw ArgumentError("brp_lowrank: power iterations must be nonnegative");

  for (int attempt = 0; attempt < 3; ++attempt) {
    Matrix y1 = m * gaussian_matrix(m.cols(), r, rng);
    for (int it = 0; it < q; ++it) y1 = m * (m.transpose() * y1);
    const Matrix& a2 = y1;
    Matrix y2 = m.transpose() * a2;
    for (int it = 0; it < q; ++it) y2 = m.transpose() * (m * y2);

    Matrix approx;
    if (q == 0) {
      approx = y1 * detail::small_pinv(a2.transpose() * y1) * y2.transpose();
    } else {
      Eigen::HouseholderQR<Matrix> qr1(y1);
      Eigen::HouseholderQR<Matrix> qr2(y2);
      const Matrix q1 = qr1.householderQ() * Matrix::Identity(m.rows(), r);
      const Matrix q2 = qr2.householderQ() * Matrix::Identity(m.cols(), r);
      const Matrix r1 = q1.transpose() * y1;
      const Matrix r2 = q2.transpose() * y2;
      const Matrix kernel = r1 * detail::small_pinv(a2.transpose() * y1) * r2.transpose();
      Eigen::JacobiSVD<Matrix> ks(kernel, Eigen::ComputeFullU | Eigen::ComputeFullV);
      // Power iterations raise singular values to the (2q+1)-th power; undo.
      Vector s = ks.singularValues();
      for (Index i = 0; i < s.size(); ++i) s(i) = std::pow(s(i), 1.0 / (2 * q + 1));
      approx = q1 * ks.matrixU() * s.asDiagonal() * ks.matrixV().transpose() * q2.transpose();
    }
    if (approx.allFinite()) return approx;
  }
  throw NumericalError("brp_lowrank: degenerate sketch after 3 attempts");
}

enum class MatrixNorm { frobenius, nuclear, l1, linf, spectral, l21 };

inline MatrixNorm parse_norm(const std::string& tag) {
  if (tag == "frobenius") return MatrixNorm::frobenius;
  if (tag == "nuclear") return MatrixNorm::nuclear;
  if (tag == "l1") return MatrixNorm::l1;
  if (tag == "linf") return MatrixNorm::linf;
  if (tag == "spectral") return MatrixNorm::spectral;
  if (tag == "l21") return MatrixNorm::l21;
  throw ArgumentError("unknown norm tag '" + tag +
                      "' (expected frobenius|nuclear|l1|linf|spectral|l21)");
}

inline double matrix_norm(const Matrix& m, MatrixNorm which) {
  require_finite(m, "matrix_norm");
  switch (which) {
    case MatrixNorm::frobenius:
      return m.norm();
    case MatrixNorm::nuclear:
      return full_svd(m).singular_values.sum();
    case MatrixNorm::l1:
      return m.cwiseAbs().sum();
    case MatrixNorm::linf:
      return m.size() ? m.cwiseAbs().maxCoeff() : 0.0;
    case MatrixNorm::spectral: {
      const Vector s = full_svd(m).singular_values;
      return s.size() ? s(0) : 0.0;
    }
    case MatrixNorm::l21:
      return m.colwise().norm().sum();
  }
  throw ArgumentError("matrix_norm: unknown norm tag");
}

inline double matrix_norm(const Matrix& m, const std::string& tag) {
  return matrix_norm(m, parse_norm(tag));
}

}  // namespace lrsd

#endif  // LRSD_LINALG_HPP
