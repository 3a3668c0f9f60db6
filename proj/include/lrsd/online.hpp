#ifndef LRSD_ONLINE_HPP
#define LRSD_ONLINE_HPP

#include <cmath>
#include <random>
#include <vector>

#include "lrsd/linalg.hpp"

namespace lrsd {

namespace detail {

// Thin QR orthonormalization with positive-diagonal sign fix, so an input
// that is already near-orthonormal comes back essentially unchanged.
inline Matrix orthonormalize(const Matrix& u) {
  Eigen::HouseholderQR<Matrix> qr(u);
  Matrix q = qr.householderQ() * Matrix::Identity(u.rows(), u.cols());
  const Matrix r = q.transpose() * u;
  for (Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

inline Vector shrink_vec(const Vector& v, double tau) {
  return v.array().sign() * (v.array().abs() - tau).max(0.0);
}

inline Matrix gather_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

inline Vector gather(const Vector& v, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out(static_cast<Index>(i)) = v(rows[i]);
  return out;
}

}  // namespace detail

/// Tracked subspace: orthonormal basis plus step-size and inner-solver knobs.
struct SubspaceState {
  Matrix basis;  // n x d, orthonormal columns
  Index frames_seen = 0;

  double eta0 = 0.1;  // geodesic step eta0 / (1 + frames_seen / t0)
  double t0 = 100.0;
  double admm_penalty = 1.8;
  int admm_max_iter = 60;
  double admm_tol = 1e-7;

  Index ambient_dim() const { return basis.rows(); }
  Index subspace_dim() const { return basis.cols(); }
};

inline SubspaceState grasta_init(Index n, Index d, std::uint64_t seed) {
  if (d < 1 || d > n) {
    throw ArgumentError("grasta_init: subspace dim " + std::to_string(d) +
                        " out of range [1, " + std::to_string(n) + "]");
  }
  std::mt19937_64 rng(seed);
  SubspaceState state;
  state.basis = detail::orthonormalize(gaussian_matrix(n, d, rng));
  return state;
}

/// Solution of the per-frame l1 fit on the observed index set.
struct RobustFit {
  Vector weights;   // d
  Vector sparse;    // |omega|
  Vector dual;      // |omega|
  int iterations = 0;
};

/// ADMM for min ||s||_1 subject to U_omega w + s = a_omega: soft threshold
/// on s, least-squares solve on w, dual ascent on y. Runs for admm_max_iter
/// sweeps, or stops early once both the primal residual and the s-change
/// (dual residual) drop below admm_tol.
inline RobustFit grasta_admm(const SubspaceState& state, const Vector& frame,
                             const std::vector<Index>& omega) {
  const Index n = state.ambient_dim();
  const Index d = state.subspace_dim();
  if (frame.size() != n) throw InputError("grasta_admm: frame length disagrees with basis");
  if (!frame.allFinite()) throw InputError("grasta_admm: frame has non-finite entries");
  const Index card = static_cast<Index>(omega.size());
  if (card < d) {
    throw ArgumentError("grasta_admm: need at least " + std::to_string(d) +
                        " observed entries, got " + std::to_string(card));
  }

  for (Index row : omega) {
    if (row < 0 || row >= n) throw ArgumentError("grasta_admm: omega index out of range");
  }
  const Matrix u_omega = detail::gather_rows(state.basis, omega);
  const Vector a_omega = detail::gather(frame, omega);
  Eigen::ColPivHouseholderQR<Matrix> qr(u_omega);
  if (qr.rank() < d) {
    throw NumericalError("grasta_admm: subsampled basis is rank-deficient (rank " +
                         std::to_string(qr.rank()) + " < " + std::to_string(d) + ")");
  }

  const double rho = state.admm_penalty;
  RobustFit fit;
  fit.weights = Vector::Zero(d);
  fit.sparse = Vector::Zero(card);
  fit.dual = Vector::Zero(card);
  for (int it = 0; it < state.admm_max_iter; ++it) {
    const Vector s_prev = fit.sparse;
    fit.sparse =
        detail::shrink_vec(a_omega - u_omega * fit.weights - fit.dual / rho, 1.0 / rho);
    fit.weights = qr.solve(a_omega - fit.sparse - fit.dual / rho);
    const Vector primal = u_omega * fit.weights + fit.sparse - a_omega;
    fit.dual += rho * primal;
    fit.iterations = it + 1;
    if (primal.norm() <= state.admm_tol &&
        rho * (fit.sparse - s_prev).norm() <= state.admm_tol) {
      break;
    }
  }
  return fit;
}

/// One tracking step: robust fit, then a rank-one geodesic move of the basis
/// along the residual direction, then re-orthonormalization. Returns the
/// sparse residual zero-padded to the full pixel grid.
inline Vector grasta_update(SubspaceState& state, const Vector& frame,
                            const std::vector<Index>& omega) {
  const RobustFit fit = grasta_admm(state, frame, omega);
  const Index n = state.ambient_dim();
  const double rho = state.admm_penalty;

  Vector s_full = Vector::Zero(n);
  Vector gamma = Vector::Zero(n);
  {
    const Matrix u_omega = detail::gather_rows(state.basis, omega);
    const Vector a_omega = detail::gather(frame, omega);
    const Vector g_omega =
        fit.dual + rho * (u_omega * fit.weights + fit.sparse - a_omega);
    for (std::size_t i = 0; i < omega.size(); ++i) {
      s_full(omega[i]) = fit.sparse(static_cast<Index>(i));
      gamma(omega[i]) = g_omega(static_cast<Index>(i));
    }
  }

  const double wn = fit.weights.norm();
  const double gn = gamma.norm();
  if (wn <= 1e-14 || gn <= 1e-14) {
    ++state.frames_seen;
    return s_full;
  }
  const double sigma = gn * wn;
  const double eta = state.eta0 / (1.0 + static_cast<double>(state.frames_seen) / state.t0);
  const Vector w_unit = fit.weights / wn;
  const Vector g_unit = gamma / gn;
  state.basis += ((std::cos(eta * sigma) - 1.0) * (state.basis * w_unit) -
                  std::sin(eta * sigma) * g_unit) *
                 w_unit.transpose();
  state.basis = detail::orthonormalize(state.basis);
  ++state.frames_seen;
  return s_full;
}

/// Uniform sample of ceil(fraction*n) indices without replacement, sorted.
inline std::vector<Index> sample_indices(Index n, double fraction, std::mt19937_64& rng) {
  if (fraction <= 0 || fraction > 1) {
    throw ArgumentError("sample_indices: fraction must lie in (0, 1]");
  }
  const Index count = std::min<Index>(
      n, static_cast<Index>(std::ceil(fraction * static_cast<double>(n))));
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(count));
  std::sort(pool.begin(), pool.end());
  return pool;
}

/// Streaming robust PCA state: explicit basis with running second-order
/// statistics of the coefficients.
struct OrpcaState {
  Matrix basis;  // n x r
  Matrix a_acc;  // r x r, symmetric PSD accumulator of coefficient outer products
  Matrix b_acc;  // n x r
  double lambda1 = 0;
  double lambda2 = 0;
  Index samples_seen = 0;

  double inner_tol = 1e-8;
  int inner_max_iter = 10000;

  Index ambient_dim() const { return basis.rows(); }
  Index rank() const { return basis.cols(); }
};

inline OrpcaState orpca_init(Index n, Index r, std::uint64_t seed, double lambda1 = 0,
                             double lambda2 = 0) {
  if (r < 1 || r > n) {
    throw ArgumentError("orpca_init: rank " + std::to_string(r) + " out of range [1, " +
                        std::to_string(n) + "]");
  }
  std::mt19937_64 rng(seed);
  OrpcaState state;
  state.basis = detail::orthonormalize(gaussian_matrix(n, r, rng));
  state.a_acc = Matrix::Zero(r, r);
  state.b_acc = Matrix::Zero(n, r);
  const double fallback = 1.0 / std::sqrt(static_cast<double>(n));
  state.lambda1 = lambda1 > 0 ? lambda1 : fallback;
  state.lambda2 = lambda2 > 0 ? lambda2 : fallback;
  return state;
}

struct OrpcaStep {
  Vector coefficients;  // r
  Vector sparse;        // n
  double cost = 0;      // per-frame surrogate at the solution, pre basis update
  int iterations = 0;
};

/// Process one frame: solve the ridge + l1 subproblem for (r, s) to the KKT
/// tolerance, fold (r, s) into the accumulators, then one block-coordinate
/// pass over the basis columns.
inline OrpcaStep orpca_step(OrpcaState& state, const Vector& frame) {
  const Index n = state.ambient_dim();
  const Index r = state.rank();
  if (frame.size() != n) throw InputError("orpca_step: frame length disagrees with basis");
  if (!frame.allFinite()) throw InputError("orpca_step: frame has non-finite entries");

  const Matrix& l = state.basis;
  const Matrix gram = l.transpose() * l + state.lambda1 * Matrix::Identity(r, r);
  const Eigen::LLT<Matrix> llt(gram);

  OrpcaStep step;
  step.coefficients = Vector::Zero(r);
  step.sparse = Vector::Zero(n);
  for (int it = 0; it < state.inner_max_iter; ++it) {
    step.coefficients = llt.solve(l.transpose() * (frame - step.sparse));
    step.sparse = detail::shrink_vec(frame - l * step.coefficients, state.lambda2);
    step.iterations = it + 1;
    // s is an exact shrink of its residual by construction; the ridge normal
    // equations for r lag by one s update.
    const double kkt_r =
        (gram * step.coefficients - l.transpose() * (frame - step.sparse))
            .cwiseAbs()
            .maxCoeff();
    if (kkt_r <= state.inner_tol) break;
  }

  const Vector fit_residual = frame - l * step.coefficients - step.sparse;
  step.cost = 0.5 * fit_residual.squaredNorm() +
              0.5 * state.lambda1 * step.coefficients.squaredNorm() +
              state.lambda2 * step.sparse.cwiseAbs().sum();

  if (step.coefficients.norm() > 0) {
    state.a_acc += step.coefficients * step.coefficients.transpose();
    state.b_acc += (frame - step.sparse) * step.coefficients.transpose();
    const Matrix a_reg = state.a_acc + state.lambda1 * Matrix::Identity(r, r);
    for (Index j = 0; j < r; ++j) {
      state.basis.col(j) += (state.b_acc.col(j) - state.basis * a_reg.col(j)) / a_reg(j, j);
    }
  }
  ++state.samples_seen;
  return step;
}

}  // namespace lrsd

#endif  // LRSD_ONLINE_HPP
