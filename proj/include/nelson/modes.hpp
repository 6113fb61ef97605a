#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nelson/common.hpp"

namespace nelson {

/// Physical and numerical parameters of the model.
///
/// `lambda` may be +infinity; only closed-form and improper-quadrature paths
/// accept that. `ir_shift` is added to the field energy H_f (never to the
/// squared field momentum).
struct ModelParams {
  double e = 0.0;
  double z = 1.0;
  double lambda = 1.0;
  double ir_shift = 0.0;

  /// Parameters whose infrared shift is derived from the coupling as e^7.
  static ModelParams with_derived_shift(double e, double z, double lambda);

  bool finite_cutoff() const { return std::isfinite(lambda); }

  /// Throws ValidationError on negative coupling, non-positive cutoff, etc.
  void validate() const;
};

/// Scalar coupling constants, each carried with its quadrature error.
struct ConstantsReport {
  Estimate c_I;          // int |phi|^2 / |k|^{1/2}
  Estimate c_II;         // int |phi|^2 / |k|
  Estimate c_A;          // identical definition to c_II
  Estimate c_eps;        // int |phi|^2 / (|k| (|k| + e^7))
  Estimate phi_norm_sq;  // int |phi|^2, log-divergent as lambda -> inf
};

/// Coupling function phi(k) = chi(k) (2|k|)^{-1/2} k / (|k| + |k|^2) with the
/// sharp cutoff chi(k) = (2 pi)^{-3/2} [|k| < lambda].
Vec3 form_factor(const Vec3& k, const ModelParams& params);

/// |phi| as a function of |k| (no direction).
double form_factor_magnitude(double k, double lambda);

/// |phi(k)|^2 as a function of |k|.
double form_factor_sq(double k, double lambda);

// Closed forms of the radial integrals; used as oracles and by the MC sampler.
double phi_norm_sq_closed_form(double lambda);
double c_II_closed_form(double lambda);

/// Adaptive radial quadrature of all constants. Divergent quantities come
/// back flagged rather than as large numbers.
ConstantsReport coupling_constants(const ModelParams& params, double tol = 1e-14);

/// int |phi(k)|^2 / |k|^{2s} dk for s in (0, 1), finite also at lambda = inf.
Estimate inverse_power_moment(double s, double lambda, double tol = 1e-13);

struct ModeGridMeta {
  std::size_t n_radial = 0;
  std::size_t n_polar = 0;
  std::size_t n_azimuth = 0;
  double lambda = 0.0;
  std::string substitution = "k=lambda*u^2";
  bool operator==(const ModeGridMeta&) const = default;
};

/// Discrete momentum modes with product quadrature weights (k^2 Jacobian
/// included), so that sum_i w_i f(k_i) approximates int_{|k|<lambda} f(k) dk.
struct ModeGrid {
  std::vector<Vec3> nodes;
  std::vector<double> magnitudes;
  std::vector<double> weights;
  ModeGridMeta meta;

  std::size_t size() const { return nodes.size(); }
  bool operator==(const ModeGrid&) const = default;
};

/// Product grid: Gauss-Legendre in u with k = lambda u^2 (radial), Gauss in
/// cos(theta) with ceil(n_angular / 2) nodes, and n_angular uniform azimuths.
ModeGrid build_mode_grid(std::size_t n_radial, std::size_t n_angular, const ModelParams& params);

/// sum_i w_i conj(f_i) g_i over the grid. Throws on length mismatch.
Complex weighted_overlap(std::span<const Complex> f, std::span<const Complex> g, const ModeGrid& grid);

}  // namespace nelson
