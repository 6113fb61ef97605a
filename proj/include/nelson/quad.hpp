#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nelson/modes.hpp"
#include "nelson/wick.hpp"

namespace nelson::quad {

using wick::IntegrandExpr;

enum class Method { Adaptive1d, Grid3d, MonteCarlo, Matrix };

std::string to_string(Method m);

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // one-sigma estimate; the JSON key is "stderr"
  std::size_t n_evals = 0;
  Method method = Method::Adaptive1d;
  std::optional<std::uint64_t> seed;
};

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a, b].
GaussRule gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0);

using Function1d = std::function<double(double)>;

/// Adaptive Gauss-Kronrod (7/15) bisection on [a, b]. Stops once the summed
/// panel error estimates fall below `tol` (absolute). Throws
/// ConvergenceError carrying the partial value when the panel budget runs
/// out. b may be +infinity (mapped through k = t / (1 - t)).
QuadResult integrate_1d(const Function1d& f, double a, double b, double tol, std::size_t max_panels = 20000);

/// Integrand of a rotation-invariant two-photon expression reduced to
/// (k1, k2, u = cos angle), measure factor 8 pi^2 k1^2 k2^2 included.
class ReducedTwoPhoton {
 public:
  ReducedTwoPhoton(IntegrandExpr expr, ModelParams params);
  double operator()(double k1, double k2, double u) const;
  const ModelParams& params() const { return params_; }

 private:
  IntegrandExpr expr_;
  ModelParams params_;
};

/// Throws ValidationError unless expr has exactly two momentum variables.
ReducedTwoPhoton reduce_two_photon(const IntegrandExpr& expr, const ModelParams& params);

/// Tensor Gauss-Legendre over [0, lambda]^2 x [-1, 1] with k = lambda s^2 in
/// both radial directions; `n` points per axis. The error is the difference
/// to the rule with n/2 points (0 if identical).
QuadResult integrate_grid3d(const ReducedTwoPhoton& f, std::size_t n);

/// Inverse-CDF sampler of |k| with density proportional to k^2 |phi(k)|^2
/// on (0, lambda).
class RadialSampler {
 public:
  explicit RadialSampler(double lambda);
  double sample(double uniform) const;
  /// |phi(k)|^2 / ||phi||^2: the 3D density of the isotropic sample.
  double density(double k) const;
  double lambda() const { return lambda_; }

 private:
  double cdf(double k) const;

  double lambda_;
  double total_;
  std::vector<double> table_k_;
  std::vector<double> table_f_;
};

/// Chunk size of the Monte Carlo partition; chunk c draws from a stream
/// seeded by (seed, c), so results do not depend on the worker count.
inline constexpr std::size_t kMonteCarloChunk = 8192;

/// Importance-sampled Monte Carlo of int prod_i dk_i expr(k). Each momentum
/// is drawn with density |phi|^2 / ||phi||^2 (isotropic). workers = 0 reads
/// NELSON_WORKERS.
QuadResult integrate_mc(const IntegrandExpr& expr, std::size_t budget, std::uint64_t seed,
                        const ModelParams& params, std::size_t workers = 0);

}  // namespace nelson::quad
