#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qsd/ensemble.hpp"
#include "test_support.hpp"

using namespace qsd;

TEST_CASE("single trajectory with no dynamics reproduces the projector") {
  OperatorSet ops;
  ops.hamiltonian = Matrix::Zero(2, 2);
  EnsembleConfig cfg;
  cfg.n_traj = 1;
  cfg.grid = TimeGrid{1e-2, 10};
  cfg.scheme = Scheme::nonlinear;
  cfg.store_times = {0.1};
  const auto result = run_ensemble(ops, test::ket_plus(), cfg);
  CHECK(max_abs(result.rho_hat[0].data - DensityMatrix::pure(test::ket_plus()).data) < 1e-14);
  CHECK(result.std_error[0] == 0.0);
}

TEST_CASE("trace distance: coincidence, orthogonal states, partial overlap") {
  const DensityMatrix g = DensityMatrix::pure(test::ket_g());
  const DensityMatrix e = DensityMatrix::pure(test::ket_e());
  CHECK(trace_distance(g, g) == 0.0);
  CHECK(trace_distance(g, e) == Catch::Approx(1.0));

  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  Matrix b = Matrix::Zero(2, 2);
  b(0, 0) = 0.7;
  b(1, 1) = 0.3;
  CHECK(trace_distance(a, b) == Catch::Approx(0.3));
  CHECK(trace_distance(a, b) == trace_distance(b, a));
}

TEST_CASE("results are bitwise deterministic for any worker count") {
  const OperatorSet ops = test::amplitude_damping();
  EnsembleConfig cfg;
  cfg.n_traj = 400;
  cfg.master_seed = 99;
  cfg.grid = TimeGrid{1e-2, 50};
  cfg.scheme = Scheme::gisin_percival;
  cfg.store_times = {0.25, 0.5};
  const auto serial = run_ensemble(ops, test::ket_e(), cfg, 1);
  const auto threaded = run_ensemble(ops, test::ket_e(), cfg, 2);
  const auto threaded4 = run_ensemble(ops, test::ket_e(), cfg, 4);
  for (std::size_t s = 0; s < 2; ++s) {
    CHECK(serial.rho_hat[s].data == threaded.rho_hat[s].data);
    CHECK(serial.rho_hat[s].data == threaded4.rho_hat[s].data);
    CHECK(serial.std_error[s] == threaded.std_error[s]);
  }
}

TEST_CASE("estimates are hermitian with unit trace within tolerance") {
  const OperatorSet ops = test::amplitude_damping();
  EnsembleConfig cfg;
  cfg.n_traj = 2000;
  cfg.master_seed = 7;
  cfg.grid = TimeGrid{2e-3, 250};
  cfg.store_times = {0.5};
  for (const Scheme scheme :
       {Scheme::linear, Scheme::linear_reweight, Scheme::nonlinear, Scheme::gisin_percival}) {
    cfg.scheme = scheme;
    const auto result = run_ensemble(ops, test::ket_e(), cfg, 2);
    const auto& rho = result.rho_hat[0];
    CHECK(rho.hermiticity() < 1e-12);
    const double trace_tol = scheme == Scheme::linear || scheme == Scheme::linear_reweight
                                 ? 5.0 * result.std_error[0] * 4.0 + 1e-10
                                 : 1e-10;
    CHECK(rho.trace_deviation() <= trace_tol);
  }
}

TEST_CASE("standard error shrinks like one over sqrt N") {
  const OperatorSet ops = test::amplitude_damping();
  EnsembleConfig cfg;
  cfg.master_seed = 55;
  cfg.grid = TimeGrid{5e-3, 100};
  cfg.scheme = Scheme::nonlinear;
  cfg.store_times = {0.5};
  cfg.n_traj = 1000;
  const auto small = run_ensemble(ops, test::ket_e(), cfg, 2);
  cfg.n_traj = 4000;
  const auto big = run_ensemble(ops, test::ket_e(), cfg, 2);
  const double ratio = big.std_error[0] / small.std_error[0];
  CHECK(ratio > 0.5 / 1.4);
  CHECK(ratio < 0.5 * 1.4);
}

TEST_CASE("all stochastic schemes agree with the master equation") {
  const OperatorSet ops = test::amplitude_damping();
  EnsembleConfig cfg;
  cfg.n_traj = 3000;
  cfg.master_seed = 11;
  cfg.grid = TimeGrid{2e-3, 500};
  cfg.store_times = {0.5, 1.0};
  for (const Scheme scheme :
       {Scheme::linear, Scheme::linear_reweight, Scheme::nonlinear, Scheme::gisin_percival}) {
    cfg.scheme = scheme;
    const auto report = compare_to_master(ops, test::ket_e(), cfg, 0.03, 2);
    INFO("scheme " << to_string(scheme));
    for (const auto& row : report.rows) {
      INFO("t=" << row.time << " distance=" << row.distance << " stderr=" << row.std_error);
      CHECK(row.pass);
    }
  }
}

TEST_CASE("unitary dynamics matches master evolution to integrator accuracy") {
  OperatorSet ops;
  ops.hamiltonian = test::sigma_z();
  EnsembleConfig cfg;
  cfg.n_traj = 2;
  cfg.master_seed = 1;
  cfg.grid = TimeGrid{1e-4, 5000};  // only the O(dt^2) Euler phase error remains
  cfg.scheme = Scheme::nonlinear;
  cfg.store_times = {0.5};
  const auto report = compare_to_master(ops, test::ket_plus(), cfg, 1e-8, 1);
  CHECK(report.rows[0].distance <= 1e-8);
  CHECK(report.pass);
}

TEST_CASE("scheme equivalence: pairwise trace distances within tolerance") {
  const OperatorSet ops = test::amplitude_damping();
  EnsembleConfig cfg;
  cfg.n_traj = 3000;
  cfg.master_seed = 13;
  cfg.grid = TimeGrid{2e-3, 500};
  cfg.store_times = {1.0};
  std::vector<DensityMatrix> estimates;
  std::vector<double> errors;
  for (const Scheme scheme :
       {Scheme::linear, Scheme::linear_reweight, Scheme::nonlinear, Scheme::gisin_percival}) {
    cfg.scheme = scheme;
    const auto result = run_ensemble(ops, test::ket_e(), cfg, 2);
    estimates.push_back(result.rho_hat[0]);
    errors.push_back(result.std_error[0]);
  }
  for (std::size_t a = 0; a < estimates.size(); ++a) {
    for (std::size_t b = a + 1; b < estimates.size(); ++b) {
      const double tol = std::max(0.03, 5.0 * (errors[a] + errors[b]));
      CHECK(trace_distance(estimates[a], estimates[b]) <= tol);
    }
  }
}

TEST_CASE("the discrete scheme is routed to the discrete workflow") {
  const OperatorSet ops = test::amplitude_damping();
  EnsembleConfig cfg;
  cfg.n_traj = 10;
  cfg.grid = TimeGrid{1e-2, 10};
  cfg.scheme = Scheme::discrete;
  cfg.store_times = {0.1};
  CHECK_THROWS_WITH(run_ensemble(ops, test::ket_e(), cfg),
                    Catch::Matchers::ContainsSubstring("discrete"));
}

TEST_CASE("trajectory errors propagate with the chunk index") {
  OperatorSet ops = test::amplitude_damping(1e9);
  EnsembleConfig cfg;
  cfg.n_traj = 100;
  cfg.grid = TimeGrid{1e2, 50};  // drift overflows to inf within ~30 steps
  cfg.scheme = Scheme::linear;
  cfg.store_times = {5000.0};
  CHECK_THROWS_AS(run_ensemble(ops, test::ket_e(), cfg, 2), std::runtime_error);
}
