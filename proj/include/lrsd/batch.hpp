#ifndef LRSD_BATCH_HPP
#define LRSD_BATCH_HPP

#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "lrsd/linalg.hpp"
#include "lrsd/model.hpp"

namespace lrsd {

namespace detail {

inline double spectral_norm_estimate(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const SvdFactors f = truncated_svd(a, 1);
  return f.singular_values(0);
}

inline void require_valid(SolverConfig& cfg, const ObservationMatrix& a, SolverKind expected) {
  cfg.solver = expected;
  const auto diags = validate(cfg, a);
  if (!diags.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& d : diags) msg += " " + d + ";";
    throw ArgumentError(msg);
  }
}

inline void require_iterates_finite(const Matrix& l, const Matrix& s, const char* who) {
  if (!l.allFinite() || !s.allFinite()) {
    throw NumericalError(std::string(who) + ": iterate has non-finite entries");
  }
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

struct SvtOutcome {
  Matrix value;
  Index rank = 0;       // singular values strictly above the threshold
  double nuclear = 0;   // nuclear norm of the thresholded matrix
};

// Prox of tau * nuclear norm using a predicted-rank partial SVD: start the
// sketch at sv_hint singular triplets and grow by sv_step while the smallest
// computed singular value still exceeds tau. Falls back to the exact SVD when
// the sketch stops being cheaper than the full decomposition.
inline SvtOutcome svt_partial(const Matrix& g, double tau, Index sv_hint, Index sv_step) {
  const Index minmn = std::min(g.rows(), g.cols());
  Index sv = std::clamp<Index>(sv_hint, 1, minmn);
  SvdFactors f;
  for (;;) {
    if (sv + 10 >= minmn) {
      f = full_svd(g);
      break;
    }
    f = truncated_svd(g, sv);
    if (f.singular_values(sv - 1) <= tau) break;
    sv = std::min<Index>(sv + sv_step, minmn);
  }
  SvtOutcome out;
  out.rank = 0;
  while (out.rank < f.singular_values.size() && f.singular_values(out.rank) > tau) ++out.rank;
  if (out.rank == 0) {
    out.value = Matrix::Zero(g.rows(), g.cols());
    return out;
  }
  const Vector kept = f.singular_values.head(out.rank).array() - tau;
  out.nuclear = kept.sum();
  out.value = f.left_vectors.leftCols(out.rank) * kept.asDiagonal() *
              f.right_vectors.leftCols(out.rank).transpose();
  return out;
}

// Best rank-r approximation (exact: full SVD + truncation).
inline SvtOutcome best_rank_r(const Matrix& g, Index r) {
  const SvdFactors f = full_svd(g);
  SvtOutcome out;
  const Index k = std::min<Index>(r, f.singular_values.size());
  out.rank = numerical_rank(f.singular_values.head(k));
  out.nuclear = f.singular_values.head(k).sum();
  out.value = f.left_vectors.leftCols(k) * f.singular_values.head(k).asDiagonal() *
              f.right_vectors.leftCols(k).transpose();
  return out;
}

inline Index nnz(const Matrix& s) { return (s.array() != 0.0).count(); }

}  // namespace detail

/// Principal component pursuit by inexact augmented Lagrange multipliers.
/// Alternates a partial-SVD singular value threshold on L and a soft
/// threshold on S under a growing penalty.
inline DecompositionResult pcp_ialm(const ObservationMatrix& a, SolverConfig cfg) {
  detail::require_valid(cfg, a, SolverKind::ialm);
  const Matrix& A = a.data;
  const Index minmn = std::min(A.rows(), A.cols());
  const double eps = std::numeric_limits<double>::epsilon();
  const double fro = A.norm();
  const double spectral = detail::spectral_norm_estimate(A);
  const double lambda = cfg.lambda;

  double mu = cfg.mu0_scale / std::max(spectral, eps);
  const double mu_cap = mu * cfg.mu_cap_factor;
  const double dual_scale =
      std::max({spectral, matrix_norm(A, MatrixNorm::linf) / lambda, eps});
  Matrix Y = A / dual_scale;
  Matrix L = Matrix::Zero(A.rows(), A.cols());
  Matrix S = Matrix::Zero(A.rows(), A.cols());

  DecompositionResult result;
  Index sv = std::min(cfg.sv_start, minmn);
  double mu_used = mu;
  for (int it = 0; it < cfg.max_iter; ++it) {
    detail::Stopwatch watch;
    const auto lt = detail::svt_partial(A - S + Y / mu, 1.0 / mu, sv, cfg.sv_step);
    L = lt.value;
    sv = lt.rank < sv ? std::min<Index>(lt.rank + 1, minmn)
                      : std::min<Index>(lt.rank + cfg.sv_step, minmn);
    S = shrink(A - L + Y / mu, lambda / mu);
    detail::require_iterates_finite(L, S, "pcp_ialm");
    const Matrix Z = A - L - S;
    Y += mu * Z;
    mu_used = mu;
    mu = std::min(mu * cfg.rho, mu_cap);

    const double res = Z.norm() / std::max(fro, eps);
    result.trace.records.push_back({lt.nuclear + lambda * S.cwiseAbs().sum(), res, lt.rank,
                                    detail::nnz(S), mu_used, watch.seconds()});
    if (res <= cfg.tol) {
      result.trace.reason = Termination::converged;
      break;
    }
  }
  result.low_rank = std::move(L);
  result.sparse = std::move(S);
  result.alm = DecompositionResult::AlmInfo{std::move(Y), mu_used};
  return result;
}

/// Exact-ALM variant: each outer iteration alternates the two proximal steps
/// until the (L,S) pair settles before the multiplier update.
inline DecompositionResult pcp_ealm(const ObservationMatrix& a, SolverConfig cfg) {
  detail::require_valid(cfg, a, SolverKind::ealm);
  const Matrix& A = a.data;
  const double eps = std::numeric_limits<double>::epsilon();
  const double fro = A.norm();
  const double spectral = detail::spectral_norm_estimate(A);
  const double lambda = cfg.lambda;

  double mu = cfg.mu0_scale / std::max(spectral, eps);
  const double mu_cap = mu * cfg.mu_cap_factor;
  const Matrix sign_a = A.array().sign();
  const double dual_scale = std::max(
      {detail::spectral_norm_estimate(sign_a), matrix_norm(sign_a, MatrixNorm::linf) / lambda,
       eps});
  Matrix Y = sign_a / dual_scale;
  Matrix L = Matrix::Zero(A.rows(), A.cols());
  Matrix S = Matrix::Zero(A.rows(), A.cols());

  DecompositionResult result;
  double mu_used = mu;
  const double inner_tol = cfg.inner_tol_factor * cfg.tol;
  for (int it = 0; it < cfg.max_iter; ++it) {
    detail::Stopwatch watch;
    Index rank = 0;
    double nuclear = 0;
    for (int inner = 0; inner < cfg.inner_max_iter; ++inner) {
      const Matrix l_prev = L;
      const Matrix s_prev = S;
      const SvdFactors f = full_svd(A - S + Y / mu);
      const Vector kept = (f.singular_values.array() - 1.0 / mu).max(0.0);
      L = f.left_vectors * kept.asDiagonal() * f.right_vectors.transpose();
      rank = (kept.array() > 0.0).count();
      nuclear = kept.sum();
      S = shrink(A - L + Y / mu, lambda / mu);
      const double change =
          std::max((L - l_prev).norm(), (S - s_prev).norm()) / std::max(fro, eps);
      if (change <= inner_tol) break;
    }
    detail::require_iterates_finite(L, S, "pcp_ealm");
    const Matrix Z = A - L - S;
    Y += mu * Z;
    mu_used = mu;
    mu = std::min(mu * cfg.rho, mu_cap);

    const double res = Z.norm() / std::max(fro, eps);
    result.trace.records.push_back({nuclear + lambda * S.cwiseAbs().sum(), res, rank,
                                    detail::nnz(S), mu_used, watch.seconds()});
    if (res <= cfg.tol) {
      result.trace.reason = Termination::converged;
      break;
    }
  }
  result.low_rank = std::move(L);
  result.sparse = std::move(S);
  result.alm = DecompositionResult::AlmInfo{std::move(Y), mu_used};
  return result;
}

/// Stable decomposition A = L + S + E with ||E||_F <= delta, by alternating
/// splitting of the augmented Lagrangian: nuclear prox on L, l1 prox on S,
/// Frobenius-ball projection on E, one shared multiplier.
inline DecompositionResult spcp_asalm(const ObservationMatrix& a, SolverConfig cfg) {
  detail::require_valid(cfg, a, SolverKind::spcp);
  const Matrix& A = a.data;
  const double eps = std::numeric_limits<double>::epsilon();
  const double fro = A.norm();
  const double spectral = detail::spectral_norm_estimate(A);
  const double lambda = cfg.lambda;
  const double delta = *cfg.delta;

  double mu = cfg.mu0_scale / std::max(spectral, eps);
  const double mu_cap = mu * cfg.mu_cap_factor;
  const double dual_scale =
      std::max({spectral, matrix_norm(A, MatrixNorm::linf) / lambda, eps});
  Matrix Y = A / dual_scale;
  Matrix L = Matrix::Zero(A.rows(), A.cols());
  Matrix S = Matrix::Zero(A.rows(), A.cols());
  Matrix E = Matrix::Zero(A.rows(), A.cols());

  DecompositionResult result;
  double mu_used = mu;
  for (int it = 0; it < cfg.max_iter; ++it) {
    detail::Stopwatch watch;
    const auto lt = detail::svt_partial(A - S - E + Y / mu, 1.0 / mu, cfg.sv_start, cfg.sv_step);
    L = lt.value;
    S = shrink(A - L - E + Y / mu, lambda / mu);
    const Matrix R = A - L - S + Y / mu;
    const double rn = R.norm();
    E = rn > delta && rn > 0 ? Matrix(R * (delta / rn)) : R;
    detail::require_iterates_finite(L, S, "spcp_asalm");
    const Matrix Z = A - L - S - E;
    Y += mu * Z;
    mu_used = mu;
    mu = std::min(mu * cfg.rho, mu_cap);

    const double res = Z.norm() / std::max(fro, eps);
    result.trace.records.push_back({lt.nuclear + lambda * S.cwiseAbs().sum(), res, lt.rank,
                                    detail::nnz(S), mu_used, watch.seconds()});
    // Converged means the splitting variables agree AND the returned noise
    // component A - L - S actually sits inside the delta ball.
    if (res <= cfg.tol && (A - L - S).norm() <= delta * (1.0 + cfg.tol)) {
      result.trace.reason = Termination::converged;
      break;
    }
  }
  result.noise = A - L - S;
  result.low_rank = std::move(L);
  result.sparse = std::move(S);
  result.alm = DecompositionResult::AlmInfo{std::move(Y), mu_used};
  return result;
}

/// Alternating projections onto {rank <= r} and {card <= k} minimizing the
/// Frobenius fit. Exact-SVD mode keeps both half-steps globally optimal;
/// the BRP flag swaps the SVD for bilateral random projection.
inline DecompositionResult godec(const ObservationMatrix& a, SolverConfig cfg) {
  detail::require_valid(cfg, a, SolverKind::godec);
  const Matrix& A = a.data;
  const Index r = *cfg.rank_bound;
  const Index k = *cfg.cardinality;
  const double eps = std::numeric_limits<double>::epsilon();
  const double fro = A.norm();
  std::mt19937_64 rng(cfg.seed);

  Matrix L = Matrix::Zero(A.rows(), A.cols());
  Matrix S = Matrix::Zero(A.rows(), A.cols());
  DecompositionResult result;
  double obj_prev = fro * fro;
  for (int it = 0; it < cfg.max_iter; ++it) {
    detail::Stopwatch watch;
    Index rank_est = r;
    if (cfg.use_brp) {
      L = brp_lowrank(A - S, r, cfg.brp_power, rng);
    } else {
      auto lt = detail::best_rank_r(A - S, r);
      L = std::move(lt.value);
      rank_est = lt.rank;
    }
    S = hard_threshold_top_k(A - L, k);
    detail::require_iterates_finite(L, S, "godec");
    const double res_norm = (A - L - S).norm();
    const double obj = res_norm * res_norm;
    result.trace.records.push_back({obj, res_norm / std::max(fro, eps), rank_est,
                                    detail::nnz(S), 0.0, watch.seconds()});
    if (obj_prev - obj <= cfg.tol * obj_prev) {
      result.trace.reason = Termination::converged;
      break;
    }
    obj_prev = obj;
  }
  result.noise = A - L - S;
  result.low_rank = std::move(L);
  result.sparse = std::move(S);
  return result;
}

/// GoDec with the cardinality constraint replaced by a soft threshold on S;
/// the support size is emergent.
inline DecompositionResult semi_soft_godec(const ObservationMatrix& a, SolverConfig cfg) {
  detail::require_valid(cfg, a, SolverKind::ssgodec);
  const Matrix& A = a.data;
  const Index r = *cfg.rank_bound;
  const double tau = *cfg.soft_tau;
  const double eps = std::numeric_limits<double>::epsilon();
  const double fro = A.norm();

  Matrix L = Matrix::Zero(A.rows(), A.cols());
  Matrix S = Matrix::Zero(A.rows(), A.cols());
  DecompositionResult result;
  double obj_prev = 0.5 * fro * fro;
  for (int it = 0; it < cfg.max_iter; ++it) {
    detail::Stopwatch watch;
    auto lt = detail::best_rank_r(A - S, r);
    L = std::move(lt.value);
    S = shrink(A - L, tau);
    detail::require_iterates_finite(L, S, "semi_soft_godec");
    const double res_norm = (A - L - S).norm();
    const double obj = 0.5 * res_norm * res_norm + tau * S.cwiseAbs().sum();
    result.trace.records.push_back({obj, res_norm / std::max(fro, eps), lt.rank,
                                    detail::nnz(S), 0.0, watch.seconds()});
    if (obj_prev - obj <= cfg.tol * obj_prev) {
      result.trace.reason = Termination::converged;
      break;
    }
    obj_prev = obj;
  }
  result.noise = A - L - S;
  result.low_rank = std::move(L);
  result.sparse = std::move(S);
  return result;
}

/// Direct robust matrix factorization: rank-r fit with the p largest
/// residual entries excluded as outliers, by block coordinate descent.
inline DecompositionResult drmf(const ObservationMatrix& a, SolverConfig cfg) {
  detail::require_valid(cfg, a, SolverKind::drmf);
  const Matrix& A = a.data;
  const Index r = *cfg.rank_bound;
  const Index p = *cfg.cardinality;
  const double eps = std::numeric_limits<double>::epsilon();
  const double fro = A.norm();

  Matrix L = Matrix::Zero(A.rows(), A.cols());
  Matrix S = Matrix::Zero(A.rows(), A.cols());
  DecompositionResult result;
  double obj_prev = fro;
  for (int it = 0; it < cfg.max_iter; ++it) {
    detail::Stopwatch watch;
    auto lt = detail::best_rank_r(A - S, r);  // clean-data fit
    L = std::move(lt.value);
    S = hard_threshold_top_k(A - L, p);  // largest residuals become outliers
    detail::require_iterates_finite(L, S, "drmf");
    const double obj = (A - L - S).norm();
    result.trace.records.push_back({obj, obj / std::max(fro, eps), lt.rank, detail::nnz(S), 0.0,
                                    watch.seconds()});
    if (obj_prev - obj <= cfg.tol * obj_prev) {
      result.trace.reason = Termination::converged;
      break;
    }
    obj_prev = obj;
  }
  result.low_rank = std::move(L);
  result.sparse = std::move(S);
  return result;
}

/// Dispatch on cfg.solver.
inline DecompositionResult decompose(const ObservationMatrix& a, const SolverConfig& cfg) {
  switch (cfg.solver) {
    case SolverKind::ealm: return pcp_ealm(a, cfg);
    case SolverKind::ialm: return pcp_ialm(a, cfg);
    case SolverKind::spcp: return spcp_asalm(a, cfg);
    case SolverKind::godec: return godec(a, cfg);
    case SolverKind::ssgodec: return semi_soft_godec(a, cfg);
    case SolverKind::drmf: return drmf(a, cfg);
  }
  throw ArgumentError("decompose: unknown solver");
}

}  // namespace lrsd

#endif  // LRSD_BATCH_HPP
