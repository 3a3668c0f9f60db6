#ifndef LRSD_MODEL_HPP
#define LRSD_MODEL_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lrsd/linalg.hpp"

namespace lrsd {

/// Pixel-by-frame observation matrix. Column j is frame j flattened
/// row-major; frame_shape records the original (height, width) when known.
struct ObservationMatrix {
  Matrix data;  // m x n, m pixels, n frames
  std::optional<std::pair<Index, Index>> frame_shape;

  ObservationMatrix() = default;

  explicit ObservationMatrix(Matrix values,
                             std::optional<std::pair<Index, Index>> shape = std::nullopt)
      : data(std::move(values)), frame_shape(shape) {
    if (data.rows() < 1 || data.cols() < 1) {
      throw InputError("ObservationMatrix: need at least one pixel and one frame");
    }
    require_finite(data, "ObservationMatrix");
    if (frame_shape && frame_shape->first * frame_shape->second != data.rows()) {
      throw InputError("ObservationMatrix: frame_shape " + std::to_string(frame_shape->first) +
                       "x" + std::to_string(frame_shape->second) + " does not cover " +
                       std::to_string(data.rows()) + " pixels");
    }
  }

  Index pixel_count() const { return data.rows(); }
  Index frame_count() const { return data.cols(); }
};

/// Stack equal-shaped images (values in [0,1]) as columns, row-major per frame.
inline ObservationMatrix stack_frames(const std::vector<Matrix>& frames) {
  if (frames.empty()) throw InputError("stack_frames: empty frame sequence");
  const Index h = frames.front().rows();
  const Index w = frames.front().cols();
  Matrix data(h * w, static_cast<Index>(frames.size()));
  for (std::size_t j = 0; j < frames.size(); ++j) {
    const Matrix& f = frames[j];
    if (f.rows() != h || f.cols() != w) {
      throw InputError("stack_frames: frame " + std::to_string(j) + " is " +
                       std::to_string(f.rows()) + "x" + std::to_string(f.cols()) + ", expected " +
                       std::to_string(h) + "x" + std::to_string(w));
    }
    require_finite(f, "stack_frames");
    if (f.minCoeff() < 0.0 || f.maxCoeff() > 1.0) {
      throw InputError("stack_frames: frame " + std::to_string(j) + " has values outside [0,1]");
    }
    for (Index r = 0; r < h; ++r)
      for (Index c = 0; c < w; ++c) data(r * w + c, static_cast<Index>(j)) = f(r, c);
  }
  return ObservationMatrix(std::move(data), std::make_pair(h, w));
}

/// Inverse of stack_frames for one column.
inline Matrix unstack_frame(const ObservationMatrix& a, Index frame) {
  if (!a.frame_shape) throw InputError("unstack_frame: observation has no frame shape");
  if (frame < 0 || frame >= a.frame_count()) {
    throw InputError("unstack_frame: frame index out of range");
  }
  const auto [h, w] = *a.frame_shape;
  Matrix img(h, w);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < w; ++c) img(r, c) = a.data(r * w + c, frame);
  return img;
}

enum class SolverKind { ealm, ialm, spcp, godec, ssgodec, drmf };

inline const char* solver_name(SolverKind s) {
  switch (s) {
    case SolverKind::ealm: return "ealm";
    case SolverKind::ialm: return "ialm";
    case SolverKind::spcp: return "spcp";
    case SolverKind::godec: return "godec";
    case SolverKind::ssgodec: return "ssgodec";
    case SolverKind::drmf: return "drmf";
  }
  return "?";
}

inline SolverKind parse_solver(const std::string& tag) {
  if (tag == "ealm") return SolverKind::ealm;
  if (tag == "ialm") return SolverKind::ialm;
  if (tag == "spcp") return SolverKind::spcp;
  if (tag == "godec") return SolverKind::godec;
  if (tag == "ssgodec") return SolverKind::ssgodec;
  if (tag == "drmf") return SolverKind::drmf;
  throw ArgumentError("unknown solver '" + tag +
                      "' (expected ealm|ialm|spcp|godec|ssgodec|drmf)");
}

/// Batch solver configuration. Zero-valued numeric fields mean "use the
/// documented default"; validate() resolves them against the data.
struct SolverConfig {
  SolverKind solver = SolverKind::ialm;
  int kind = 0;        // component count K in {1,2,3}; 0 = derived from solver
  double lambda = 0;   // sparsity weight; 0 = 1/sqrt(max(m,n))
  std::optional<Index> rank_bound;
  std::optional<Index> cardinality;
  std::optional<double> soft_tau;
  std::optional<double> delta;
  double tol = 0;      // 0 = 1e-7 for ALM solvers, 1e-6 objective stall otherwise
  int max_iter = 0;    // 0 = 1000 for ALM solvers, 100 otherwise
  std::uint64_t seed = 0;

  bool use_brp = false;  // GoDec: replace the exact SVD by bilateral projection
  int brp_power = 2;

  // Augmented-Lagrangian schedule: mu0 = mu0_scale / ||A||_2, mu growth rho,
  // cap mu0 * mu_cap_factor.
  double mu0_scale = 1.25;
  double rho = 1.5;
  double mu_cap_factor = 1e7;

  // Exact-ALM inner loop.
  double inner_tol_factor = 0.1;
  int inner_max_iter = 50;

  // Partial-SVD rank prediction.
  Index sv_start = 10;
  Index sv_step = 5;

  bool is_alm() const {
    return solver == SolverKind::ealm || solver == SolverKind::ialm ||
           solver == SolverKind::spcp;
  }
};

enum class Termination { converged, max_iter };

struct TraceRecord {
  double objective = 0;
  double residual = 0;
  Index rank_estimate = 0;
  Index sparse_cardinality = 0;
  double mu = 0;  // ALM penalty at this iteration; 0 for non-ALM solvers
  double wall_seconds = 0;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  Termination reason = Termination::max_iter;
};

struct DecompositionResult {
  Matrix low_rank;
  std::optional<Matrix> sparse;
  std::optional<Matrix> noise;
  SolverTrace trace;

  // Final multiplier state of ALM solvers; lets callers audit the proximal
  // fixed points without re-running the iteration.
  struct AlmInfo {
    Matrix dual;
    double mu = 0;
  };
  std::optional<AlmInfo> alm;
};

/// Relative reconstruction residual; absent components count as zero.
inline double residual(const ObservationMatrix& a, const DecompositionResult& result) {
  auto check = [&](const Matrix& c, const char* name) {
    if (c.rows() != a.data.rows() || c.cols() != a.data.cols()) {
      throw InputError(std::string("residual: ") + name + " dimensions disagree with A");
    }
  };
  check(result.low_rank, "L");
  Matrix diff = a.data - result.low_rank;
  if (result.sparse) {
    check(*result.sparse, "S");
    diff -= *result.sparse;
  }
  if (result.noise) {
    check(*result.noise, "E");
    diff -= *result.noise;
  }
  return diff.norm() / std::max(a.data.norm(), std::numeric_limits<double>::epsilon());
}

inline int default_kind(SolverKind s) {
  switch (s) {
    case SolverKind::spcp:
    case SolverKind::godec:
    case SolverKind::ssgodec:
      return 3;
    default:
      return 2;
  }
}

/// Check config invariants against the data and resolve defaults in place.
/// Returns human-readable violations; empty means ok.
inline std::vector<std::string> validate(SolverConfig& cfg, const ObservationMatrix& a) {
  std::vector<std::string> diags;
  const Index m = a.pixel_count();
  const Index n = a.frame_count();

  if (cfg.kind == 0) cfg.kind = default_kind(cfg.solver);
  if (cfg.kind < 1 || cfg.kind > 3) diags.push_back("kind must be 1, 2 or 3");
  if (cfg.lambda == 0) cfg.lambda = 1.0 / std::sqrt(static_cast<double>(std::max(m, n)));
  if (cfg.lambda <= 0) diags.push_back("lambda must be positive");
  if (cfg.tol == 0) cfg.tol = cfg.is_alm() ? 1e-7 : 1e-6;
  if (cfg.tol <= 0) diags.push_back("tol must be positive");
  if (cfg.max_iter == 0) cfg.max_iter = cfg.is_alm() ? 1000 : 100;
  if (cfg.max_iter < 1) diags.push_back("max_iter must be positive");

  const bool needs_rank = cfg.solver == SolverKind::godec || cfg.solver == SolverKind::ssgodec ||
                          cfg.solver == SolverKind::drmf;
  if (needs_rank && !cfg.rank_bound) diags.push_back("rank_bound required");
  if (cfg.rank_bound && (*cfg.rank_bound < 1 || *cfg.rank_bound > std::min(m, n))) {
    diags.push_back("rank_bound outside [1, min(m,n)]");
  }
  if ((cfg.solver == SolverKind::godec || cfg.solver == SolverKind::drmf) && !cfg.cardinality) {
    diags.push_back("cardinality required");
  }
  if (cfg.cardinality && (*cfg.cardinality < 0 || *cfg.cardinality > m * n)) {
    diags.push_back("cardinality outside [0, m*n]");
  }
  if (cfg.solver == SolverKind::ssgodec && !cfg.soft_tau) diags.push_back("soft_tau required");
  if (cfg.soft_tau && *cfg.soft_tau < 0) diags.push_back("soft_tau must be nonnegative");
  if (cfg.solver == SolverKind::spcp && !cfg.delta) {
    diags.push_back("delta required for the stable decomposition");
  }
  if (cfg.delta && *cfg.delta < 0) diags.push_back("delta must be nonnegative");
  if (cfg.kind == 3 && cfg.solver == SolverKind::ealm) diags.push_back("ealm solves kind=2 only");
  if (cfg.kind == 3 && cfg.solver == SolverKind::ialm) diags.push_back("ialm solves kind=2 only");
  return diags;
}

}  // namespace lrsd

#endif  // LRSD_MODEL_HPP
