// Seeded Brownian path generation and the classical Wiener-functional layer:
// exponential functionals, the multiplication-operator identity, randomized
// coherent / Phi processes, and the randomized Weyl displacement action.
//
// Two kinds of paths appear:
//   * RealNoisePath: m independent real channels, increments ~ N(0, dt).
//     Exponential functionals e~(u) and the Weyl machinery live here.
//   * ComplexNoisePath: n complex channels B_k = B_{1,k} + i B_{2,k} built
//     from two independent real components of variance dt each, so that
//     dB_k dB_l^* = 2 delta_kl dt. The stochastic Schroedinger integrators
//     are driven by these.
//
// Stochastic exponentials are accumulated in log space with one exact
// exponential update per grid cell; state-dependent coefficients are always
// evaluated at the left endpoint (Ito semantics).
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "qsd/rng.hpp"
#include "qsd/types.hpp"

namespace qsd {

struct TimeGrid {
  double dt = 0.0;
  std::size_t steps = 0;

  double duration() const { return dt * static_cast<double>(steps); }
  double time(std::size_t j) const { return dt * static_cast<double>(j); }

  /// Grid index of a time that must lie on the grid (within 1e-9 absolute).
  std::size_t index_of(double t) const {
    const auto j = static_cast<std::size_t>(std::llround(t / dt));
    require(j <= steps && std::abs(time(j) - t) <= 1e-9, "TimeGrid: time not on grid");
    return j;
  }

  bool operator==(const TimeGrid&) const = default;
};

inline void validate(const TimeGrid& grid) {
  require(grid.dt > 0.0, "TimeGrid: dt must be positive");
  require(grid.steps >= 1, "TimeGrid: at least one step");
}

struct NoiseSeed {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;
};

struct RealNoisePath {
  TimeGrid grid;
  RealMatrix increments;  // steps x channels, entry (j,k) = dB_k(t_j)

  std::size_t channels() const { return static_cast<std::size_t>(increments.cols()); }

  /// B_k(t_j) = sum of increments before cell j.
  double brownian(std::size_t j, std::size_t k) const {
    double b = 0.0;
    for (std::size_t i = 0; i < j; ++i) b += increments(i, k);
    return b;
  }
};

struct ComplexNoisePath {
  TimeGrid grid;
  Matrix increments;  // steps x channels

  std::size_t channels() const { return static_cast<std::size_t>(increments.cols()); }
};

/// Deterministic function of (seed, grid, channels); increment (j,k) comes
/// from the Philox block at (stream, step j, channel k).
inline RealNoisePath sample_real_path(const NoiseSeed& seed, const TimeGrid& grid,
                                      std::size_t channels) {
  validate(grid);
  rng::CounterRng gen(seed.master_seed, seed.stream_index);
  const double scale = std::sqrt(grid.dt);
  RealMatrix inc(grid.steps, channels);
  for (std::size_t j = 0; j < grid.steps; ++j)
    for (std::size_t k = 0; k < channels; ++k)
      inc(j, k) = scale * gen.normal_pair(j, static_cast<std::uint32_t>(k)).first;
  return RealNoisePath{grid, std::move(inc)};
}

inline ComplexNoisePath sample_complex_path(const NoiseSeed& seed, const TimeGrid& grid,
                                            std::size_t channels) {
  validate(grid);
  rng::CounterRng gen(seed.master_seed, seed.stream_index);
  const double scale = std::sqrt(grid.dt);
  Matrix inc(grid.steps, channels);
  for (std::size_t j = 0; j < grid.steps; ++j) {
    for (std::size_t k = 0; k < channels; ++k) {
      const auto [z1, z2] = gen.normal_pair(j, static_cast<std::uint32_t>(k));
      inc(j, k) = Complex(scale * z1, scale * z2);
    }
  }
  return ComplexNoisePath{grid, std::move(inc)};
}

// ---------------------------------------------------------------------------
// Test functions: piecewise-constant C^n-valued maps on the grid cells.

struct TestFunction {
  TimeGrid grid;
  Matrix values;  // steps x channels, value on cell [t_j, t_{j+1})

  std::size_t channels() const { return static_cast<std::size_t>(values.cols()); }

  static TestFunction zero(const TimeGrid& grid, std::size_t channels) {
    return TestFunction{grid, Matrix::Zero(grid.steps, channels)};
  }

  static TestFunction constant(const TimeGrid& grid, const Vector& value) {
    Matrix v(grid.steps, value.size());
    for (std::size_t j = 0; j < grid.steps; ++j) v.row(j) = value.transpose();
    return TestFunction{grid, std::move(v)};
  }

  /// amplitude * 1_{[t0,t1)} on one channel, zero elsewhere.
  static TestFunction indicator(const TimeGrid& grid, std::size_t channels, std::size_t channel,
                                double t0, double t1, Complex amplitude = 1.0) {
    Matrix v = Matrix::Zero(grid.steps, channels);
    const std::size_t j0 = grid.index_of(t0);
    const std::size_t j1 = grid.index_of(t1);
    for (std::size_t j = j0; j < j1; ++j) v(j, channel) = amplitude;
    return TestFunction{grid, std::move(v)};
  }

  /// <u|v> = sum_k integral u_k^* v_k dt (exact for piecewise-constant data).
  Complex inner(const TestFunction& other) const {
    require(grid == other.grid && channels() == other.channels(),
            "TestFunction::inner: grid mismatch");
    Complex acc = 0.0;
    for (std::size_t j = 0; j < grid.steps; ++j)
      for (std::size_t k = 0; k < channels(); ++k)
        acc += std::conj(values(j, k)) * other.values(j, k) * grid.dt;
    return acc;
  }

  double norm2() const { return inner(*this).real(); }
};

// ---------------------------------------------------------------------------
// Exponential functionals e~(u)(B) = exp( int u^T dB - 1/2 int u^T u ds ).

namespace detail {

template <typename PathT>
Complex exponential_functional_impl(const TestFunction& u, const PathT& path) {
  require(u.grid == path.grid && u.channels() == path.channels(),
          "exponential_functional: grid/channel mismatch");
  Complex log_value = 0.0;
  for (std::size_t j = 0; j < u.grid.steps; ++j) {
    for (std::size_t k = 0; k < u.channels(); ++k) {
      const Complex uv = u.values(j, k);
      log_value += uv * path.increments(j, k) - 0.5 * uv * uv * u.grid.dt;
    }
  }
  return std::exp(log_value);
}

}  // namespace detail

inline Complex exponential_functional(const TestFunction& u, const RealNoisePath& path) {
  return detail::exponential_functional_impl(u, path);
}

inline Complex exponential_functional(const TestFunction& u, const ComplexNoisePath& path) {
  return detail::exponential_functional_impl(u, path);
}

// ---------------------------------------------------------------------------
// Multiplication-operator identity:
//   E_B[ B_k(t) e~(u)^* e~(v) ] = exp<u|v> * int_0^t (u_k^* + v_k)(s) ds.

struct PropositionCheck {
  Complex mc_estimate;   // left-hand side, Monte Carlo
  double std_error = 0;  // sqrt(Var(Re) + Var(Im)) / sqrt(N)
  Complex quadrature;    // right-hand side, exact grid quadrature
  std::size_t n_samples = 0;
};

inline PropositionCheck proposition_check(const TestFunction& u, const TestFunction& v,
                                          std::size_t channel, double t,
                                          std::uint64_t master_seed, std::size_t n_samples) {
  require(u.grid == v.grid && u.channels() == v.channels(),
          "proposition_check: test functions disagree");
  const std::size_t jt = u.grid.index_of(t);

  Complex sum = 0.0;
  double sum_sq_re = 0.0, sum_sq_im = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto path = sample_real_path({master_seed, i}, u.grid, u.channels());
    const double bt = path.brownian(jt, channel);
    const Complex sample = bt * std::conj(exponential_functional(u, path)) *
                           exponential_functional(v, path);
    sum += sample;
    sum_sq_re += sample.real() * sample.real();
    sum_sq_im += sample.imag() * sample.imag();
  }
  const auto n = static_cast<double>(n_samples);
  const Complex mean = sum / n;
  double variance = 0.0;
  if (n_samples > 1) {
    variance = (sum_sq_re - n * mean.real() * mean.real()) / (n - 1.0) +
               (sum_sq_im - n * mean.imag() * mean.imag()) / (n - 1.0);
    variance = std::max(variance, 0.0);
  }

  Complex integral = 0.0;
  for (std::size_t j = 0; j < jt; ++j)
    integral += (std::conj(u.values(j, channel)) + v.values(j, channel)) * u.grid.dt;
  const Complex rhs = std::exp(u.inner(v)) * integral;

  return PropositionCheck{mean, std::sqrt(variance / n), rhs, n_samples};
}

// ---------------------------------------------------------------------------
// Randomized coherent process alpha(f + if) and the related Phi process.
//   d alpha = sum_k (f_k dB_k - |f_k|^2 dt) alpha,   alpha(0) = 1
//   d Phi   = sum_k (f_k dB_k + |f_k|^2 dt) Phi,     Phi(0)  = 1
// with Phi_t(f) = exp(2 int |f|^2 ds) alpha(f + if)(t) exactly per cell.

namespace detail {

inline std::vector<Complex> exponential_process(const TestFunction& f,
                                                const ComplexNoisePath& path,
                                                double drift_sign) {
  require(f.grid == path.grid && f.channels() == path.channels(),
          "exponential process: grid/channel mismatch");
  std::vector<Complex> out(f.grid.steps + 1);
  Complex log_value = 0.0;
  out[0] = 1.0;
  for (std::size_t j = 0; j < f.grid.steps; ++j) {
    for (std::size_t k = 0; k < f.channels(); ++k) {
      const Complex fv = f.values(j, k);
      log_value += fv * path.increments(j, k) + drift_sign * std::norm(fv) * f.grid.dt;
    }
    out[j + 1] = std::exp(log_value);
  }
  return out;
}

}  // namespace detail

inline std::vector<Complex> coherent_process(const TestFunction& f, const ComplexNoisePath& path) {
  return detail::exponential_process(f, path, -1.0);
}

inline std::vector<Complex> phi_process(const TestFunction& f, const ComplexNoisePath& path) {
  return detail::exponential_process(f, path, +1.0);
}

// ---------------------------------------------------------------------------
// Randomized Weyl displacement acting on exponential functionals.
//
//   W(f)(t) e~(u)(B) = e~(u restricted to [t, T))(B) * exp(gamma_u(t))
//   d gamma_u = (f+u)^T dB - 1/2 [ f^dag f + (f+u)^T (f+u) + 2 f^dag u ] dt
//
// f may be a non-anticipating path functional: it is called once per cell
// and must only read increments of strictly earlier cells.

using DisplacementFn = std::function<Vector(std::size_t cell, const RealNoisePath& path)>;

inline Complex randomized_weyl_apply(const DisplacementFn& f, const TestFunction& u,
                                     const RealNoisePath& path, double t) {
  require(u.grid == path.grid && u.channels() == path.channels(),
          "randomized_weyl_apply: grid/channel mismatch");
  const std::size_t jt = u.grid.index_of(t);
  const double dt = u.grid.dt;

  Complex gamma = 0.0;
  for (std::size_t j = 0; j < jt; ++j) {
    const Vector fj = f(j, path);
    require(static_cast<std::size_t>(fj.size()) == u.channels(),
            "randomized_weyl_apply: displacement has wrong channel count");
    Complex db_term = 0.0, sq_term = 0.0, cross = 0.0;
    double f_norm2 = 0.0;
    for (std::size_t k = 0; k < u.channels(); ++k) {
      const Complex uv = u.values(j, k);
      const Complex sum = fj(k) + uv;
      db_term += sum * path.increments(j, k);
      sq_term += sum * sum;
      cross += std::conj(fj(k)) * uv;
      f_norm2 += std::norm(fj(k));
    }
    gamma += db_term - 0.5 * (f_norm2 + sq_term + 2.0 * cross) * dt;
  }

  Complex tail = 0.0;
  for (std::size_t j = jt; j < u.grid.steps; ++j) {
    for (std::size_t k = 0; k < u.channels(); ++k) {
      const Complex uv = u.values(j, k);
      tail += uv * path.increments(j, k) - 0.5 * uv * uv * dt;
    }
  }
  return std::exp(gamma + tail);
}

inline Complex randomized_weyl_apply(const TestFunction& f, const TestFunction& u,
                                     const RealNoisePath& path, double t) {
  require(f.grid == u.grid && f.channels() == u.channels(),
          "randomized_weyl_apply: displacement grid mismatch");
  return randomized_weyl_apply(
      DisplacementFn([&f](std::size_t cell, const RealNoisePath&) -> Vector {
        return f.values.row(cell).transpose();
      }),
      u, path, t);
}

/// Deterministic-f closed form
///   exp(-1/2 int_0^t |f|^2 - int_0^t f^dag u) e~(u + 1_[0,t) f)(B),
/// the independent route used to cross-check the gamma accumulation.
inline Complex weyl_closed_form(const TestFunction& f, const TestFunction& u,
                                const RealNoisePath& path, double t) {
  require(f.grid == u.grid && f.channels() == u.channels(),
          "weyl_closed_form: grid mismatch");
  const std::size_t jt = u.grid.index_of(t);
  Complex prefactor_log = 0.0;
  TestFunction shifted = u;
  for (std::size_t j = 0; j < jt; ++j) {
    for (std::size_t k = 0; k < u.channels(); ++k) {
      prefactor_log -= (0.5 * std::norm(f.values(j, k)) +
                        std::conj(f.values(j, k)) * u.values(j, k)) *
                       u.grid.dt;
      shifted.values(j, k) += f.values(j, k);
    }
  }
  return std::exp(prefactor_log) * exponential_functional(shifted, path);
}

}  // namespace qsd
