// Minimal library walkthrough: a decaying qubit integrated three ways.
// Prints <sigma_z>(t) from the master equation, from a small Gisin-Percival
// ensemble, and from one linear trajectory with its Girsanov weight.
//
//   ./decaying_qubit [n_traj]
#include <cstdio>
#include <cstdlib>

#include "qsd/core.hpp"
#include "qsd/ensemble.hpp"
#include "qsd/unravel.hpp"

using namespace qsd;

int main(int argc, char** argv) {
  const std::size_t n_traj = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2000;

  Matrix lower = Matrix::Zero(2, 2);
  lower(0, 1) = 1.0;  // |g><e|, decay rate 1 in the c=1 convention
  const OperatorSet ops{Matrix::Zero(2, 2), {lower}, 1.0};
  const Vector excited{{Complex(0, 0), Complex(1, 0)}};

  const TimeGrid grid{1e-3, 1000};
  const auto master = master_evolve(ops, DensityMatrix::pure(excited), 1.0, grid.dt);

  EnsembleConfig cfg;
  cfg.n_traj = n_traj;
  cfg.master_seed = 1;
  cfg.grid = grid;
  cfg.scheme = Scheme::gisin_percival;
  cfg.store_times = {0.25, 0.5, 0.75, 1.0};
  const auto ensemble = run_ensemble(ops, excited, cfg);

  std::printf("time   master<sz>  ensemble<sz>  stderr\n");
  for (std::size_t s = 0; s < cfg.store_times.size(); ++s) {
    const auto idx = grid.index_of(cfg.store_times[s]);
    const double exact = (master[idx].data(1, 1) - master[idx].data(0, 0)).real();
    const auto& rho = ensemble.rho_hat[s].data;
    std::printf("%.2f   %+.5f    %+.5f      %.1e\n", cfg.store_times[s], exact,
                (rho(1, 1) - rho(0, 0)).real(), ensemble.std_error[s]);
  }

  const auto path = sample_complex_path({1, 0}, grid, 1);
  const auto rec = linear_sse_evolve(ops, excited, path);
  std::printf("\none linear trajectory: Z(1) = %.4f, E over trajectories would be 1\n",
              girsanov_weight(rec, 1.0));
  return 0;
}
