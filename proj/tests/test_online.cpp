#include <catch2/catch_amalgamated.hpp>
#include <numeric>
#include <random>

#include "lrsd/online.hpp"
#include "support.hpp"

using lrsd::Index;
using lrsd::Matrix;
using lrsd::Vector;
using namespace testsupport;

namespace {

std::vector<Index> full_omega(Index n) {
  std::vector<Index> omega(static_cast<std::size_t>(n));
  std::iota(omega.begin(), omega.end(), Index{0});
  return omega;
}

}  // namespace

TEST_CASE("grasta_init: square case is orthogonal, construction is orthonormal",
          "[online]") {
  const auto square = lrsd::grasta_init(4, 4, 7);
  REQUIRE(lrsd::gram_deviation(square.basis) < 1e-12);
  REQUIRE((square.basis * square.basis.transpose() - Matrix::Identity(4, 4))
              .cwiseAbs()
              .maxCoeff() < 1e-12);

  const auto tall = lrsd::grasta_init(50, 6, 8);
  REQUIRE(lrsd::gram_deviation(tall.basis) < 1e-12);
  REQUIRE_THROWS_AS(lrsd::grasta_init(4, 5, 0), lrsd::ArgumentError);
}

TEST_CASE("grasta_init: fixed seed reproduces the basis", "[online]") {
  const auto a = lrsd::grasta_init(30, 5, 12345);
  const auto b = lrsd::grasta_init(30, 5, 12345);
  REQUIRE((a.basis - b.basis).cwiseAbs().maxCoeff() == 0.0);
  const auto c = lrsd::grasta_init(30, 5, 54321);
  REQUIRE((a.basis - c.basis).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("grasta_admm: in-subspace frame with full omega", "[online]") {
  std::mt19937_64 rng(301);
  auto state = lrsd::grasta_init(40, 4, 1);
  const Vector w0 = random_matrix(4, 1, rng).col(0);
  const Vector a = state.basis * w0;
  const auto fit = lrsd::grasta_admm(state, a, full_omega(40));
  REQUIRE(fit.sparse.cwiseAbs().maxCoeff() <= 1e-6);
  REQUIRE((fit.weights - state.basis.transpose() * a).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("grasta_admm: a single gross outlier lands in s", "[online]") {
  std::mt19937_64 rng(307);
  auto state = lrsd::grasta_init(60, 5, 2);
  const Vector w0 = random_matrix(5, 1, rng).col(0);
  Vector a = state.basis * w0;
  a(17) += 100.0;
  const auto fit = lrsd::grasta_admm(state, a, full_omega(60));
  const double total = fit.sparse.cwiseAbs().sum();
  REQUIRE(total > 0);
  REQUIRE(std::abs(fit.sparse(17)) / total >= 0.99);
}

TEST_CASE("grasta_admm: complete square basis drives s to zero", "[online]") {
  std::mt19937_64 rng(311);
  auto state = lrsd::grasta_init(6, 6, 3);
  const Vector a = random_matrix(6, 1, rng).col(0);
  const auto fit = lrsd::grasta_admm(state, a, full_omega(6));
  REQUIRE(fit.sparse.cwiseAbs().maxCoeff() <= 1e-6);
  REQUIRE((state.basis * fit.weights - a).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("grasta_admm: shrink fixed point at termination", "[online]") {
  std::mt19937_64 rng(313);
  auto state = lrsd::grasta_init(50, 4, 4);
  const Vector w0 = random_matrix(4, 1, rng).col(0);
  Vector a = state.basis * w0;
  a(3) += 5.0;
  a(30) -= 2.0;
  const auto omega = full_omega(50);
  const auto fit = lrsd::grasta_admm(state, a, omega);

  Matrix u_omega(50, 4);
  for (Index i = 0; i < 50; ++i) u_omega.row(i) = state.basis.row(omega[i]);
  const double rho = state.admm_penalty;
  const Vector pre = a - u_omega * fit.weights - fit.dual / rho;
  const Vector expected =
      pre.array().sign() * (pre.array().abs() - 1.0 / rho).max(0.0);
  REQUIRE((fit.sparse - expected).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("grasta_admm: rank-deficient subsampled basis names the condition", "[online]") {
  Matrix u(4, 2);
  u << 1, 0, 1, 0, 0, 1, 0, 1;
  lrsd::SubspaceState state;
  state.basis = lrsd::detail::orthonormalize(u);
  const Vector a = Vector::Ones(4);
  try {
    lrsd::grasta_admm(state, a, {0, 1});
    FAIL("expected NumericalError");
  } catch (const lrsd::NumericalError& e) {
    REQUIRE(std::string(e.what()).find("rank-deficient") != std::string::npos);
  }
  REQUIRE_THROWS_AS(lrsd::grasta_admm(state, a, {0}), lrsd::ArgumentError);
}

TEST_CASE("grasta_update: repeated frames align the basis with the frame", "[online]") {
  // Amplitude low enough that the l1 term never activates: the update is then
  // plain geodesic descent on the projection residual and contracts fast.
  std::mt19937_64 rng(317);
  std::uniform_real_distribution<double> unit(0.1, 1.0);
  Vector a(64);
  for (Index i = 0; i < 64; ++i) a(i) = unit(rng) * 0.006;
  auto state = lrsd::grasta_init(64, 1, 5);
  state.eta0 = 4.0;
  state.t0 = 1000.0;
  const auto omega = full_omega(64);
  for (int t = 0; t < 50; ++t) lrsd::grasta_update(state, a, omega);
  REQUIRE(angle_to_vector(state.basis, a) <= 1e-3);
  REQUIRE(state.frames_seen == 50);
}

TEST_CASE("grasta_update: in-span frame leaves the basis in place", "[online]") {
  std::mt19937_64 rng(331);
  auto state = lrsd::grasta_init(40, 3, 6);
  const Matrix before = state.basis;
  // keep entries below the 1/rho threshold so the fit is exact
  const Vector a = state.basis * (0.3 * random_matrix(3, 1, rng).col(0));
  lrsd::grasta_update(state, a, full_omega(40));
  REQUIRE((state.basis - before).norm() <= 1e-6);
}

TEST_CASE("grasta_update: orthonormality persists under subsampling", "[online]") {
  std::mt19937_64 rng(337);
  auto state = lrsd::grasta_init(80, 4, 7);
  for (int t = 0; t < 60; ++t) {
    const Vector a = random_matrix(80, 1, rng).col(0);
    std::mt19937_64 omega_rng(1000 + t);
    const auto omega = lrsd::sample_indices(80, 0.4, omega_rng);
    lrsd::grasta_update(state, a, omega);
    REQUIRE(lrsd::gram_deviation(state.basis) <= 1e-8);
  }
}

TEST_CASE("grasta_update: returned sparse vector is zero-padded to the grid", "[online]") {
  std::mt19937_64 rng(347);
  auto state = lrsd::grasta_init(20, 2, 8);
  const Vector a = random_matrix(20, 1, rng).col(0);
  std::mt19937_64 omega_rng(99);
  const auto omega = lrsd::sample_indices(20, 0.5, omega_rng);
  const Vector s = lrsd::grasta_update(state, a, omega);
  REQUIRE(s.size() == 20);
  std::vector<bool> observed(20, false);
  for (Index i : omega) observed[static_cast<std::size_t>(i)] = true;
  for (Index i = 0; i < 20; ++i) {
    if (!observed[static_cast<std::size_t>(i)]) REQUIRE(s(i) == 0.0);
  }
}

TEST_CASE("sample_indices: deterministic, sorted, no repeats", "[online]") {
  std::mt19937_64 r1(5), r2(5);
  const auto a = lrsd::sample_indices(100, 0.3, r1);
  const auto b = lrsd::sample_indices(100, 0.3, r2);
  REQUIRE(a == b);
  REQUIRE(a.size() == 30);
  REQUIRE(std::is_sorted(a.begin(), a.end()));
  REQUIRE(std::adjacent_find(a.begin(), a.end()) == a.end());
  REQUIRE_THROWS_AS(lrsd::sample_indices(100, 0.0, r1), lrsd::ArgumentError);
}

TEST_CASE("orpca_step: large lambda2 disables the sparse term", "[online]") {
  std::mt19937_64 rng(353);
  auto state = lrsd::orpca_init(30, 3, 9, 0.1, 100.0);
  const Vector a = state.basis * random_matrix(3, 1, rng).col(0);
  const Matrix basis_before = state.basis;
  const auto step = lrsd::orpca_step(state, a);
  REQUIRE(step.sparse.cwiseAbs().maxCoeff() == 0.0);
  const Matrix gram =
      basis_before.transpose() * basis_before + 0.1 * Matrix::Identity(3, 3);
  const Vector ridge = gram.llt().solve(basis_before.transpose() * a);
  REQUIRE((step.coefficients - ridge).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("orpca_step: zero frame is a no-op apart from the counter", "[online]") {
  auto state = lrsd::orpca_init(25, 4, 10);
  const Matrix basis_before = state.basis;
  const auto step = lrsd::orpca_step(state, Vector::Zero(25));
  REQUIRE(step.coefficients.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(step.sparse.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(state.a_acc.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(state.b_acc.cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((state.basis - basis_before).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(state.samples_seen == 1);
}

TEST_CASE("orpca_step: KKT residuals at every step of a stream", "[online]") {
  std::mt19937_64 rng(359);
  const Matrix truth = lrsd::detail::orthonormalize(random_matrix(40, 3, rng));
  auto state = lrsd::orpca_init(40, 3, 11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    Vector a = truth * random_matrix(3, 1, rng).col(0);
    for (Index i = 0; i < 40; ++i) {
      if (unit(rng) < 0.05) a(i) += 10.0 * (unit(rng) - 0.5);
    }
    const Matrix basis = state.basis;  // basis used by this step
    const auto step = lrsd::orpca_step(state, a);

    const Matrix gram =
        basis.transpose() * basis + state.lambda1 * Matrix::Identity(3, 3);
    const double kkt_r = (gram * step.coefficients -
                          basis.transpose() * (a - step.sparse))
                             .cwiseAbs()
                             .maxCoeff();
    REQUIRE(kkt_r <= 1e-8);
    const Vector res = a - basis * step.coefficients;
    const Vector expected =
        res.array().sign() * (res.array().abs() - state.lambda2).max(0.0);
    REQUIRE((step.sparse - expected).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("orpca_step: stationary stream cost decreases over time", "[online]") {
  std::mt19937_64 rng(20260806);
  const auto frames = make_stationary_stream(60, 3, 200, 0.05, 8.0, rng);
  auto state = lrsd::orpca_init(60, 3, 101);
  std::vector<double> costs;
  for (const auto& a : frames) costs.push_back(lrsd::orpca_step(state, a).cost);
  const double head = std::accumulate(costs.begin(), costs.begin() + 50, 0.0) / 50.0;
  const double tail = std::accumulate(costs.end() - 50, costs.end(), 0.0) / 50.0;
  REQUIRE(tail <= head);
}

TEST_CASE("grasta: identical seed and omega sequence reproduce the stream", "[online]") {
  std::mt19937_64 frame_rng(373);
  std::vector<Vector> frames;
  for (int t = 0; t < 20; ++t) frames.push_back(random_matrix(30, 1, frame_rng).col(0));
  auto run = [&]() {
    auto state = lrsd::grasta_init(30, 3, 2024);
    for (int t = 0; t < 20; ++t) {
      std::mt19937_64 omega_rng(900 + t);
      const auto omega = lrsd::sample_indices(30, 0.6, omega_rng);
      lrsd::grasta_update(state, frames[static_cast<std::size_t>(t)], omega);
    }
    return state.basis;
  };
  const Matrix first = run();
  const Matrix second = run();
  REQUIRE((first - second).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("orpca_init: determinism and validation", "[online]") {
  const auto a = lrsd::orpca_init(20, 2, 777);
  const auto b = lrsd::orpca_init(20, 2, 777);
  REQUIRE((a.basis - b.basis).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.lambda1 == Catch::Approx(1.0 / std::sqrt(20.0)));
  REQUIRE_THROWS_AS(lrsd::orpca_init(5, 6, 0), lrsd::ArgumentError);
  REQUIRE(a.a_acc.isZero());
}
