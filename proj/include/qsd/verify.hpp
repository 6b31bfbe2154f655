// Named verification suites behind the `verify` subcommand: each check runs
// one machine-checkable identity and reports the measured value against its
// tolerance. Randomized checks draw their instances from fixed seeds so a
// verify run is reproducible.
#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qsd/config.hpp"
#include "qsd/core.hpp"
#include "qsd/discrete.hpp"
#include "qsd/ensemble.hpp"
#include "qsd/noise.hpp"
#include "qsd/rng.hpp"
#include "qsd/symmetry.hpp"
#include "qsd/unravel.hpp"

namespace qsd {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;   // the quantity under test
  double tolerance = 0.0;  // pass threshold (meaning depends on comparison)
  std::string detail;
};

namespace verify_detail {

// deterministic random instances for the randomized suites
class Draw {
 public:
  explicit Draw(std::uint64_t seed) : gen_(seed, 0) {}
  Complex cnormal() {
    const auto [a, b] = gen_.normal_pair(counter_++, 0, rng::Purpose::scratch);
    return Complex(a, b);
  }
  Matrix matrix(Eigen::Index d, double scale) {
    Matrix m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j < d; ++j) m(i, j) = scale * cnormal();
    return m;
  }
  Matrix unitary(Eigen::Index d) {
    Eigen::HouseholderQR<Matrix> qr(matrix(d, 1.0));
    return Matrix(qr.householderQ());
  }
  OperatorSet ops(Eigen::Index d, std::size_t channels, double c) {
    OperatorSet o;
    o.hamiltonian = hermitize(matrix(d, 1.0));
    for (std::size_t k = 0; k < channels; ++k) o.lindblads.push_back(matrix(d, 0.5));
    o.dissipator_prefactor = c;
    return o;
  }
  DensityMatrix density(Eigen::Index d) {
    const Matrix a = matrix(d, 1.0);
    Matrix rho = a * a.adjoint();
    rho /= rho.trace();
    return DensityMatrix{std::move(rho)};
  }
  Vector state(Eigen::Index d) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = cnormal();
    return v / v.norm();
  }

 private:
  rng::CounterRng gen_;
  std::uint64_t counter_ = 0;
};

inline OperatorSet unraveling_ops(const RunConfig& cfg, std::string& note) {
  if (cfg.system.dissipator_prefactor == 1.0) return cfg.system;
  note = "system converted to the c=1 convention for this check";
  return with_prefactor(cfg.system, 1.0);
}

inline KrausFamily kraus_or_default(const RunConfig& cfg) {
  if (cfg.discrete) return cfg.discrete->family;
  // default: single-step amplitude damping with p = 0.3
  Matrix k0 = Matrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(0.7);
  Matrix k1 = Matrix::Zero(2, 2);
  k1(0, 1) = std::sqrt(0.3);
  return KrausFamily{{k0, k1}};
}

}  // namespace verify_detail

inline std::vector<std::string> verify_check_names() {
  return {"generator-unitality", "generator-trace",    "generator-duality",
          "convention-bridge",   "complete-positivity", "symmetry-translation",
          "symmetry-rotation",   "martingale-linear",   "martingale-discrete",
          "girsanov-substitution", "reweighting",       "wiener-inner-product",
          "wiener-proposition",  "weyl-isometry",       "ensemble-master"};
}

/// Runs the requested named checks ("all" expands to every registered one).
inline std::vector<CheckResult> run_verify(const RunConfig& cfg,
                                           const std::vector<std::string>& requested,
                                           unsigned n_threads = 0) {
  using verify_detail::Draw;

  std::vector<std::string> names = requested;
  if (names.empty() || (names.size() == 1 && names[0] == "all")) names = verify_check_names();
  {
    const auto known = verify_check_names();
    for (const auto& name : names) {
      if (std::find(known.begin(), known.end(), name) == known.end())
        throw ConfigError("verify", "unknown check '" + name + "'");
    }
  }

  std::map<std::string, std::function<CheckResult()>> registry;

  registry["generator-unitality"] = [] {
    Draw draw(101);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto d = static_cast<Eigen::Index>(2 + i % 3);
      const OperatorSet ops = draw.ops(d, 1 + i % 3, i % 2 ? 0.5 : 1.0);
      worst = std::max(worst, max_abs(generator_heisenberg(ops, Matrix::Identity(d, d))));
    }
    return CheckResult{"generator-unitality", worst <= 1e-12, worst, 1e-12,
                       "max |L(I)| over 100 randomized operator sets"};
  };

  registry["generator-trace"] = [] {
    Draw draw(102);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto d = static_cast<Eigen::Index>(2 + i % 3);
      const OperatorSet ops = draw.ops(d, 2, i % 2 ? 0.5 : 1.0);
      worst = std::max(worst, std::abs(generator_schrodinger(ops, draw.density(d)).trace()));
    }
    return CheckResult{"generator-trace", worst <= 1e-12, worst, 1e-12,
                       "max |tr L*(rho)| over 100 randomized inputs"};
  };

  registry["generator-duality"] = [] {
    Draw draw(103);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto d = static_cast<Eigen::Index>(2 + i % 3);
      const OperatorSet ops = draw.ops(d, 2, i % 2 ? 0.5 : 1.0);
      const DensityMatrix rho = draw.density(d);
      const Matrix x = draw.matrix(d, 1.0);
      worst = std::max(worst, std::abs((generator_schrodinger(ops, rho) * x).trace() -
                                       (rho.data * generator_heisenberg(ops, x)).trace()));
    }
    return CheckResult{"generator-duality", worst <= 1e-10, worst, 1e-10,
                       "max |tr(L*(rho) X) - tr(rho L(X))|"};
  };

  registry["convention-bridge"] = [] {
    Draw draw(104);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      const OperatorSet ops = draw.ops(3, 2, 1.0);
      const OperatorSet half = with_prefactor(ops, 0.5);
      const Matrix x = draw.matrix(3, 1.0);
      worst = std::max(worst,
                       max_abs(generator_heisenberg(ops, x) - generator_heisenberg(half, x)));
    }
    return CheckResult{"convention-bridge", worst <= 1e-12, worst, 1e-12,
                       "c=1 {L} versus c=1/2 {sqrt2 L}"};
  };

  registry["complete-positivity"] = [] {
    Draw draw(105);
    double min_eig = 0.0;
    for (int i = 0; i < 20; ++i) {
      const auto d = static_cast<Eigen::Index>(2 + i % 3);
      const OperatorSet ops = draw.ops(d, 1 + i % 2, i % 2 ? 0.5 : 1.0);
      for (const double t : {0.1, 1.0, 10.0})
        min_eig = std::min(min_eig, choi_check(semigroup_exact(ops, t)).min_eigenvalue);
    }
    return CheckResult{"complete-positivity", min_eig >= -1e-9, min_eig, -1e-9,
                       "min Choi eigenvalue of T_t, t in {0.1, 1, 10}"};
  };

  registry["symmetry-translation"] = [] {
    Draw draw(106);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto d = static_cast<Eigen::Index>(2 + i % 3);
      const auto n = static_cast<std::size_t>(1 + i % 3);
      const OperatorSet ops = draw.ops(d, n, i % 2 ? 0.5 : 1.0);
      Vector ell(n);
      for (std::size_t k = 0; k < n; ++k) ell(k) = draw.cnormal();
      worst = std::max(worst,
                       generator_distance(ops, translate_ops(ops, TranslationParam::constant(ell))));
    }
    return CheckResult{"symmetry-translation", worst <= 1e-10, worst, 1e-10,
                       "generator distance under translation, both conventions"};
  };

  registry["symmetry-rotation"] = [] {
    Draw draw(107);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const auto d = static_cast<Eigen::Index>(2 + i % 3);
      const auto n = static_cast<std::size_t>(2 + i % 2);
      const OperatorSet ops = draw.ops(d, n, i % 2 ? 0.5 : 1.0);
      const RotationMatrix rot{draw.unitary(static_cast<Eigen::Index>(n))};
      worst = std::max(worst, generator_distance(ops, rotate_ops(ops, rot)));
    }
    return CheckResult{"symmetry-rotation", worst <= 1e-10, worst, 1e-10,
                       "generator distance under channel rotation, both conventions"};
  };

  registry["martingale-linear"] = [&cfg] {
    std::string note;
    const OperatorSet ops = verify_detail::unraveling_ops(cfg, note);
    const std::size_t n_traj = std::min<std::size_t>(std::max<std::size_t>(cfg.n_traj, 1000),
                                                     20'000);
    double sum = 0.0, sum_sq = 0.0;
    Unraveler engine(ops, UnravelScheme::linear, false);
    std::vector<Complex> db(ops.channels());
    const double scale = std::sqrt(cfg.grid.dt);
    for (std::size_t i = 0; i < n_traj; ++i) {
      rng::CounterRng gen(cfg.master_seed, i);
      engine.reset(cfg.initial_state);
      for (std::size_t j = 0; j < cfg.grid.steps; ++j) {
        for (std::size_t k = 0; k < ops.channels(); ++k) {
          const auto [z1, z2] = gen.normal_pair(j, static_cast<std::uint32_t>(k));
          db[k] = Complex(scale * z1, scale * z2);
        }
        engine.step(db, cfg.grid.dt);
      }
      const double z = engine.state().squaredNorm();
      sum += z;
      sum_sq += z * z;
    }
    const auto n = static_cast<double>(n_traj);
    const double mean = sum / n;
    const double std_error = std::sqrt(std::max(sum_sq / n - mean * mean, 0.0) / n);
    CheckResult result{"martingale-linear", std::abs(mean - 1.0) <= 5.0 * std_error,
                       std::abs(mean - 1.0), 5.0 * std_error,
                       "|E[<psi|psi>] - 1| at T over " + std::to_string(n_traj) + " paths"};
    if (!note.empty()) result.detail += "; " + note;
    return result;
  };

  registry["martingale-discrete"] = [&cfg] {
    const KrausFamily family = verify_detail::kraus_or_default(cfg);
    const std::size_t n = cfg.discrete ? std::min<std::size_t>(cfg.discrete->steps, 8) : 8;
    Vector phi0 = Vector::Zero(family.dim());
    phi0(family.dim() - 1) = 1.0;
    const DensityMatrix grain = coarse_grain_discrete(family, phi0, n);
    // trace of the exhaustive sum is sum_y nu_n(y) = E_mu[Z_n]
    const double measured = std::abs(grain.data.trace().real() - 1.0);
    return CheckResult{"martingale-discrete", measured <= 1e-12, measured, 1e-12,
                       "|E[Z_n] - 1| exhaustively at n = " + std::to_string(n)};
  };

  registry["girsanov-substitution"] = [&cfg] {
    std::string note;
    const OperatorSet ops = verify_detail::unraveling_ops(cfg, note);
    const auto path = sample_complex_path({cfg.master_seed, 1}, cfg.grid, ops.channels());
    const auto gp = gisin_percival_evolve(ops, cfg.initial_state, path, false);
    ComplexNoisePath shifted{cfg.grid, Matrix(cfg.grid.steps, ops.channels())};
    for (std::size_t j = 0; j < cfg.grid.steps; ++j) {
      const Vector ell = expectations(ops, gp.psi[j], gp.psi[0]);
      for (std::size_t k = 0; k < ops.channels(); ++k)
        shifted.increments(j, k) =
            path.increments(j, k) + 2.0 * std::conj(ell(k)) * cfg.grid.dt;
    }
    const auto nl = nonlinear_evolve(ops, cfg.initial_state, shifted, false);
    double worst = 0.0;
    for (std::size_t j = 0; j <= cfg.grid.steps; ++j)
      worst = std::max(worst, (nl.psi[j] - gp.psi[j]).cwiseAbs().maxCoeff());
    CheckResult result{"girsanov-substitution", worst <= 1e-12, worst, 1e-12,
                       "stepwise nonlinear diffusion + shift versus gisin-percival"};
    if (!note.empty()) result.detail += "; " + note;
    return result;
  };

  registry["reweighting"] = [&cfg] {
    std::string note;
    const OperatorSet ops = verify_detail::unraveling_ops(cfg, note);
    const std::size_t n_traj = std::min<std::size_t>(std::max<std::size_t>(cfg.n_traj, 1000),
                                                     10'000);
    const Eigen::Index d = ops.dim();
    Matrix weighted = Matrix::Zero(d, d);
    Matrix raw = Matrix::Zero(d, d);
    RealMatrix raw_sq = RealMatrix::Zero(d, d);
    for (std::size_t i = 0; i < n_traj; ++i) {
      const auto path = sample_complex_path({cfg.master_seed, i}, cfg.grid, ops.channels());
      const auto rec = linear_sse_evolve(ops, cfg.initial_state, path);
      const Matrix contrib = rec.psi.back() * rec.psi.back().adjoint();
      weighted += rec.girsanov_weight.back() * (rec.Psi.back() * rec.Psi.back().adjoint());
      raw += contrib;
      raw_sq += contrib.cwiseAbs2();
    }
    const auto n = static_cast<double>(n_traj);
    const Matrix mean_raw = raw / n;
    const double measured = max_abs(weighted / n - mean_raw);
    const double std_error =
        std::sqrt(((raw_sq / n - mean_raw.cwiseAbs2()).cwiseMax(0.0)).maxCoeff() / n);
    CheckResult result{"reweighting", measured <= 5.0 * std_error + 1e-10, measured,
                       5.0 * std_error + 1e-10,
                       "entrywise |E[Z |Psi><Psi|] - E[|psi><psi|]| at T"};
    if (!note.empty()) result.detail += "; " + note;
    return result;
  };

  registry["wiener-inner-product"] = [&cfg] {
    const TimeGrid grid{0.01, 100};
    Draw draw(108);
    TestFunction u = TestFunction::zero(grid, 2);
    TestFunction v = TestFunction::zero(grid, 2);
    for (std::size_t j = 0; j < grid.steps; ++j)
      for (std::size_t k = 0; k < 2; ++k) {
        u.values(j, k) = 0.5 * draw.cnormal();
        v.values(j, k) = 0.5 * draw.cnormal();
      }
    Complex sum = 0.0;
    double sum_sq = 0.0;
    const std::size_t n_samples = 40'000;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const auto path = sample_real_path({cfg.master_seed + 17, i}, grid, 2);
      const Complex s =
          std::conj(exponential_functional(u, path)) * exponential_functional(v, path);
      sum += s;
      sum_sq += std::norm(s);
    }
    const auto n = static_cast<double>(n_samples);
    const Complex mean = sum / n;
    const double std_error = std::sqrt(std::max(sum_sq / n - std::norm(mean), 0.0) / n);
    const double measured = std::abs(mean - std::exp(u.inner(v)));
    return CheckResult{"wiener-inner-product", measured <= 5.0 * std_error, measured,
                       5.0 * std_error, "|E[e~(u)* e~(v)] - exp<u,v>|"};
  };

  registry["wiener-proposition"] = [&cfg] {
    const TimeGrid grid{0.01, 100};
    const auto v = TestFunction::indicator(grid, 1, 0, 0.0, 1.0);
    const auto check = proposition_check(v, v, 0, 1.0, cfg.master_seed + 23, 50'000);
    const double measured = std::abs(check.mc_estimate - check.quadrature);
    return CheckResult{"wiener-proposition", measured <= 5.0 * check.std_error, measured,
                       5.0 * check.std_error, "E[B_k(t) e~(u)* e~(v)] versus quadrature"};
  };

  registry["weyl-isometry"] = [&cfg] {
    const TimeGrid grid{0.005, 200};
    Draw draw(109);
    TestFunction u = TestFunction::zero(grid, 1);
    TestFunction v = TestFunction::zero(grid, 1);
    TestFunction f = TestFunction::zero(grid, 1);
    for (std::size_t j = 0; j < grid.steps; ++j) {
      u.values(j, 0) = 0.5 * draw.cnormal();
      v.values(j, 0) = 0.5 * draw.cnormal();
      f.values(j, 0) = 0.4 * draw.cnormal();
    }
    Complex sum = 0.0;
    double sum_sq = 0.0;
    const std::size_t n_samples = 30'000;
    for (std::size_t i = 0; i < n_samples; ++i) {
      const auto path = sample_real_path({cfg.master_seed + 29, i}, grid, 1);
      const Complex s = std::conj(randomized_weyl_apply(f, u, path, 1.0)) *
                        randomized_weyl_apply(f, v, path, 1.0);
      sum += s;
      sum_sq += std::norm(s);
    }
    const auto n = static_cast<double>(n_samples);
    const Complex mean = sum / n;
    const double std_error = std::sqrt(std::max(sum_sq / n - std::norm(mean), 0.0) / n);
    const double measured = std::abs(mean - std::exp(u.inner(v)));
    return CheckResult{"weyl-isometry", measured <= 5.0 * std_error, measured, 5.0 * std_error,
                       "|E[(W(f)e~(u))* W(f)e~(v)] - exp<u,v>|"};
  };

  registry["ensemble-master"] = [&cfg, n_threads] {
    std::string note;
    const OperatorSet ops = verify_detail::unraveling_ops(cfg, note);
    EnsembleConfig ens = cfg.ensemble_config();
    ens.n_traj = std::min<std::size_t>(std::max<std::size_t>(ens.n_traj, 1000), 10'000);
    if (ens.scheme == Scheme::discrete) ens.scheme = Scheme::gisin_percival;
    const auto report = compare_to_master(ops, cfg.initial_state, ens,
                                          kDefaultComparisonFloor, n_threads);
    double worst = 0.0;
    double tolerance = kDefaultComparisonFloor;
    for (const auto& row : report.rows) {
      worst = std::max(worst, row.distance);
      tolerance = std::max(tolerance, 5.0 * row.std_error);
    }
    CheckResult result{"ensemble-master", report.pass, worst, tolerance,
                       "trace distance to the master solution at the store times (N=" +
                           std::to_string(ens.n_traj) + ", scheme " + to_string(ens.scheme) +
                           ")"};
    if (!note.empty()) result.detail += "; " + note;
    return result;
  };

  std::vector<CheckResult> results;
  results.reserve(names.size());
  for (const auto& name : names) results.push_back(registry.at(name)());
  return results;
}

}  // namespace qsd
