// CSV emission for the batch front door. Every file starts with one comment
// line recording master_seed, dt, N, scheme and tool version; numbers are
// written with 17 significant digits for lossless round trips.
#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "qsd/core.hpp"
#include "qsd/discrete.hpp"
#include "qsd/ensemble.hpp"
#include "qsd/noise.hpp"
#include "qsd/unravel.hpp"
#include "qsd/version.hpp"

namespace qsd::csv {

inline std::string num(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline std::string metadata_line(std::uint64_t master_seed, double dt, std::size_t n,
                                 const std::string& scheme) {
  return "# qsd " + std::string(kVersion) + " master_seed=" + std::to_string(master_seed) +
         " dt=" + num(dt) + " N=" + std::to_string(n) + " scheme=" + scheme;
}

/// time, then row-major re/im of rho for every grid point.
inline void write_master(std::ostream& out, const std::string& header, double dt,
                         const std::vector<DensityMatrix>& states) {
  out << header << '\n';
  const Eigen::Index d = states.front().dim();
  out << "time";
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      out << ",re_" << i << '_' << j << ",im_" << i << '_' << j;
  out << '\n';
  for (std::size_t step = 0; step < states.size(); ++step) {
    out << num(dt * static_cast<double>(step));
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        out << ',' << num(states[step].data(i, j).real()) << ','
            << num(states[step].data(i, j).imag());
    out << '\n';
  }
}

/// time, norm_sq, weight, then re/im of the normalized state.
inline void write_trajectory(std::ostream& out, const std::string& header,
                             const TrajectoryRecord& rec) {
  out << header << '\n';
  const Eigen::Index d = rec.psi.front().size();
  out << "time,norm_sq,weight";
  for (Eigen::Index i = 0; i < d; ++i) out << ",re_" << i << ",im_" << i;
  out << '\n';
  for (std::size_t j = 0; j < rec.Psi.size(); ++j) {
    out << num(rec.grid.time(j)) << ',' << num(rec.norm_sq[j]) << ','
        << num(rec.girsanov_weight[j]);
    for (Eigen::Index i = 0; i < d; ++i)
      out << ',' << num(rec.Psi[j](i).real()) << ',' << num(rec.Psi[j](i).imag());
    out << '\n';
  }
}

/// time, d^2 re/im pairs of rho_hat, then the max entrywise standard error.
inline void write_ensemble(std::ostream& out, const std::string& header,
                           const EnsembleResult& result) {
  out << header << '\n';
  const Eigen::Index d = result.rho_hat.front().dim();
  out << "time";
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      out << ",re_" << i << '_' << j << ",im_" << i << '_' << j;
  out << ",stderr\n";
  for (std::size_t s = 0; s < result.times.size(); ++s) {
    out << num(result.times[s]);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j)
        out << ',' << num(result.rho_hat[s].data(i, j).real()) << ','
            << num(result.rho_hat[s].data(i, j).imag());
    out << ',' << num(result.std_error[s]) << '\n';
  }
}

/// step, outcome, cumulative nu and Z, then the post-collapse amplitudes.
inline void write_discrete(std::ostream& out, const std::string& header,
                           const DiscreteTrajectory& traj, std::size_t k_outcomes) {
  out << header << '\n';
  const Eigen::Index d = traj.states.front().size();
  out << "step,outcome,nu,Z";
  for (Eigen::Index i = 0; i < d; ++i) out << ",re_" << i << ",im_" << i;
  out << '\n';
  double nu = 1.0;
  double k_power = 1.0;
  for (std::size_t j = 0; j < traj.outcomes.size(); ++j) {
    nu *= traj.step_probability[j];
    k_power *= static_cast<double>(k_outcomes);
    out << (j + 1) << ',' << traj.outcomes[j] << ',' << num(nu) << ',' << num(k_power * nu);
    for (Eigen::Index i = 0; i < d; ++i)
      out << ',' << num(traj.states[j + 1](i).real()) << ',' << num(traj.states[j + 1](i).imag());
    out << '\n';
  }
}

/// step, channel, re, im — debugging export of noise increments.
inline void write_path(std::ostream& out, const std::string& header,
                       const ComplexNoisePath& path) {
  out << header << '\n';
  out << "step,channel,re,im\n";
  for (std::size_t j = 0; j < path.grid.steps; ++j)
    for (std::size_t k = 0; k < path.channels(); ++k)
      out << j << ',' << k << ',' << num(path.increments(j, k).real()) << ','
          << num(path.increments(j, k).imag()) << '\n';
}

}  // namespace qsd::csv
