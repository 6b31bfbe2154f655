#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qsd/discrete.hpp"
#include "test_support.hpp"

using namespace qsd;

namespace {

/// K0 = diag(1, sqrt(1-p)), K1 = sqrt(p) |g><e|: single-step amplitude damping.
KrausFamily damping_family(double p = 0.3) {
  Matrix k0 = Matrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(1.0 - p);
  Matrix k1 = Matrix::Zero(2, 2);
  k1(0, 1) = std::sqrt(p);
  return KrausFamily{{k0, k1}};
}

/// Random valid family from the first block column of a random unitary.
KrausFamily random_family(test::Rand& rand, Eigen::Index d, std::size_t k) {
  const Matrix u = rand.unitary(d * static_cast<Eigen::Index>(k));
  KrausFamily family;
  for (std::size_t y = 0; y < k; ++y)
    family.operators.push_back(u.block(static_cast<Eigen::Index>(y) * d, 0, d, d));
  return family;
}

}  // namespace

TEST_CASE("kraus validation: identity family, damping family, double counting") {
  CHECK(kraus_validate(KrausFamily{{Matrix::Identity(2, 2)}}) == 0.0);
  CHECK(kraus_validate(damping_family(0.3)) <= 1e-15);
  const KrausFamily doubled{{Matrix::Identity(2, 2), Matrix::Identity(2, 2)}};
  CHECK(kraus_validate(doubled) == Catch::Approx(1.0));
  CHECK_THROWS_AS(require_valid(doubled), std::invalid_argument);
}

TEST_CASE("dilation: trivial family, damping family, determinism") {
  const auto trivial = dilate(KrausFamily{{Matrix::Identity(1, 1)}});
  CHECK(max_abs(trivial.matrix - Matrix::Identity(1, 1)) == 0.0);

  const KrausFamily family = damping_family();
  const auto dil = dilate(family);
  CHECK(dil.matrix.rows() == 4);
  CHECK(max_abs(dil.matrix.adjoint() * dil.matrix - Matrix::Identity(4, 4)) < 1e-12);
  for (std::size_t y = 0; y < 2; ++y) CHECK(max_abs(dil.block(y, 0) - family.operators[y]) == 0.0);

  const auto again = dilate(family);
  CHECK(dil.matrix == again.matrix);

  test::Rand rand(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_family(rand, 2 + trial % 2, 2 + trial % 2);
    const auto u = dilate(f);
    const auto dk = u.matrix.rows();
    CHECK(max_abs(u.matrix.adjoint() * u.matrix - Matrix::Identity(dk, dk)) < 1e-10);
  }
}

TEST_CASE("channel action: identity, damping oracle, unitality, duality") {
  const KrausFamily family = damping_family(0.3);
  const DensityMatrix rho_e = DensityMatrix::pure(test::ket_e());

  const DensityMatrix once = channel_apply(family, rho_e);
  CHECK(std::abs(once.data(0, 0).real() - 0.3) < 1e-14);
  CHECK(std::abs(once.data(1, 1).real() - 0.7) < 1e-14);

  const KrausFamily id{{Matrix::Identity(2, 2)}};
  CHECK(max_abs(channel_apply(id, rho_e).data - rho_e.data) == 0.0);

  CHECK(max_abs(channel_heisenberg(family, Matrix::Identity(2, 2)) - Matrix::Identity(2, 2)) <
        1e-12);

  test::Rand rand(32);
  for (int trial = 0; trial < 20; ++trial) {
    const auto f = random_family(rand, 2, 3);
    const DensityMatrix rho = rand.density(2);
    const Matrix x = rand.matrix(2, 2);
    const Complex lhs = (channel_apply(f, rho).data * x).trace();
    const Complex rhs = (rho.data * channel_heisenberg(f, x)).trace();
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

TEST_CASE("collapse step: probabilities, impossible branch, completeness") {
  const KrausFamily family = damping_family(0.3);

  const auto [state, p] = collapse_step(family, test::ket_e(), 1);
  CHECK(p == Catch::Approx(0.3));
  CHECK(max_abs(Matrix(state - test::ket_g())) < 1e-14);

  CHECK_THROWS_AS(collapse_step(family, test::ket_g(), 1), std::domain_error);

  test::Rand rand(33);
  for (int trial = 0; trial < 10; ++trial) {
    const auto f = random_family(rand, 3, 2);
    const auto probs = outcome_probabilities(f, rand.state(3));
    double total = 0.0;
    for (const double v : probs) total += v;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("trajectory sampling: trivial family and closed-form agreement") {
  const KrausFamily id{{Matrix::Identity(2, 2)}};
  const auto traj = sample_trajectory(id, test::ket_plus(), 5, {123, 0});
  CHECK(traj.nu == Catch::Approx(1.0).margin(1e-12));
  CHECK(traj.Z == Catch::Approx(1.0).margin(1e-12));
  for (const auto& s : traj.states) CHECK(max_abs(Matrix(s - test::ket_plus())) < 1e-12);

  const KrausFamily family = damping_family(0.4);
  for (std::uint64_t stream = 0; stream < 50; ++stream) {
    const auto t = sample_trajectory(family, test::ket_plus(), 6, {321, stream});
    const auto closed = collapse_closed_form(family, test::ket_plus(), t.outcomes);
    CHECK((t.states.back() - closed.state).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(t.nu - closed.probability) < 1e-12 * std::max(1.0, t.nu));
    CHECK(t.Z == Catch::Approx(std::pow(2.0, 6.0) * t.nu));
  }

  const auto a = sample_trajectory(family, test::ket_plus(), 6, {77, 5});
  const auto b = sample_trajectory(family, test::ket_plus(), 6, {77, 5});
  CHECK(a.outcomes == b.outcomes);
}

TEST_CASE("exhaustive enumeration: total probability, marginals, martingale") {
  const KrausFamily family = damping_family(0.35);
  const Vector phi0 = test::ket_plus();

  // sum over all strings of nu_n = 1, and the martingale E_mu[Z_n] = 1
  for (const std::size_t n : {1u, 4u, 8u}) {
    double total_nu = 0.0;
    const auto k = family.outcomes();
    std::vector<std::size_t> string(n, 0);
    bool done = false;
    while (!done) {
      Vector chi = phi0;
      for (const auto y : string) chi = family.operators[y] * chi;
      total_nu += chi.squaredNorm();
      std::size_t pos = 0;
      while (pos < n && ++string[pos] == k) string[pos++] = 0;
      done = pos == n;
    }
    CHECK(std::abs(total_nu - 1.0) < 1e-12);  // also E[Z_n] under uniform measure
  }

  // marginal consistency: summing nu_{n+1} over the last outcome gives nu_n
  const std::size_t n = 3;
  std::vector<std::size_t> prefix(n, 0);
  bool done = false;
  while (!done) {
    Vector chi = phi0;
    for (const auto y : prefix) chi = family.operators[y] * chi;
    const double nu_n = chi.squaredNorm();
    double marginal = 0.0;
    for (std::size_t y = 0; y < family.outcomes(); ++y)
      marginal += (family.operators[y] * chi).squaredNorm();
    CHECK(std::abs(marginal - nu_n) < 1e-12);
    std::size_t pos = 0;
    while (pos < n && ++prefix[pos] == family.outcomes()) prefix[pos++] = 0;
    done = pos == n;
  }
}

TEST_CASE("martingale property prefix by prefix: (1/k) sum_y Z_{n+1} = Z_n") {
  const KrausFamily family = damping_family(0.25);
  const Vector phi0 = test::ket_plus();
  test::Rand rand(34);
  for (int trial = 0; trial < 20; ++trial) {
    // random prefix of random length
    const auto n = static_cast<std::size_t>(1 + trial % 5);
    std::vector<std::size_t> prefix;
    Vector chi = phi0;
    for (std::size_t j = 0; j < n; ++j) {
      const auto y = static_cast<std::size_t>(rand.uniform() * 2.0);
      prefix.push_back(y);
      chi = family.operators[y] * chi;
    }
    const double z_n = std::pow(2.0, static_cast<double>(n)) * chi.squaredNorm();
    double avg_next = 0.0;
    for (std::size_t y = 0; y < family.outcomes(); ++y) {
      const double nu_next = (family.operators[y] * chi).squaredNorm();
      avg_next += std::pow(2.0, static_cast<double>(n + 1)) * nu_next;
    }
    avg_next /= static_cast<double>(family.outcomes());
    CHECK(std::abs(avg_next - z_n) < 1e-12 * std::max(1.0, z_n));
  }
}

TEST_CASE("coarse graining equals iterated channel application") {
  const KrausFamily family = damping_family(0.3);
  const Vector phi0 = test::ket_e();

  const auto zero_steps = coarse_grain_discrete(family, phi0, 0);
  CHECK(max_abs(zero_steps.data - DensityMatrix::pure(phi0).data) == 0.0);

  DensityMatrix iterated = DensityMatrix::pure(phi0);
  for (std::size_t n = 1; n <= 8; ++n) {
    iterated = channel_apply(family, iterated);
    const auto exhaustive = coarse_grain_discrete(family, phi0, n);
    CHECK(max_abs(exhaustive.data - iterated.data) < 1e-12);
  }
}

TEST_CASE("monte carlo coarse graining approaches the channel power") {
  const KrausFamily family = damping_family(0.3);
  const Vector phi0 = test::ket_plus();
  DensityMatrix expected = DensityMatrix::pure(phi0);
  for (int i = 0; i < 3; ++i) expected = channel_apply(family, expected);
  const auto mc = coarse_grain_discrete_mc(family, phi0, 3, 40'000, 2025);
  CHECK(max_abs(mc.data - expected.data) < 0.02);
}

TEST_CASE("one dilation step reproduces collapse probabilities") {
  test::Rand rand(35);
  for (int trial = 0; trial < 10; ++trial) {
    const auto family = trial == 0 ? damping_family() : random_family(rand, 2, 2);
    const auto dil = dilate(family);
    const Vector phi = rand.state(2);

    // |phi (x) 0> lives in block column x = 0
    Vector input = Vector::Zero(4);
    input.segment(0, 2) = phi;
    const Vector output = dil.matrix * input;
    const auto probs = outcome_probabilities(family, phi);
    for (std::size_t y = 0; y < 2; ++y) {
      const double via_unitary = output.segment(static_cast<Eigen::Index>(y) * 2, 2).squaredNorm();
      CHECK(std::abs(via_unitary - probs[y]) < 1e-12);
    }
  }
}
