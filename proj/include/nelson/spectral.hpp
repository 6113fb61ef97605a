#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nelson/fock.hpp"
#include "nelson/lanczos.hpp"
#include "nelson/quad.hpp"

namespace nelson {

struct HydrogenRef {
  double gamma = 0.0;      // decay rate Z e^2 / (8 pi)
  double E_at = 0.0;       // -gamma^2
  double p2_moment = 0.0;  // -2 E_at
};

/// Closed-form hydrogen reference values. Needs Z > 0 and e > 0.
HydrogenRef hydrogen_ground(const ModelParams& params);

/// -(Z e^2 / 4 pi)^2 / 4, also at e = 0 or Z = 0.
double atomic_energy(double e, double z);

/// Mode-grid and truncation of a Fock basis.
struct BasisSpec {
  std::size_t n_radial = 3;
  std::size_t n_angular = 4;
  std::size_t n_max = 3;
  bool operator==(const BasisSpec&) const = default;
};

/// Same-basis coefficients <Omega| s |Omega> of the four builtin strings.
struct MatrixCoefficients {
  double a4 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
  /// e^4 and e^6 parts: -a4 and -4 b1 - 4 b2 + 2 b3.
  double expansion(double e) const;
};

MatrixCoefficients matrix_path_coefficients(const FockOperators& ops);

/// Perturbative ground state Omega - e^2 R A*A* Omega - 2e^3 R PA R A*A* Omega
/// - 2e^3 R A*P R A*A* Omega (not normalized). Needs N_max >= 3.
FockVector trial_state_selfenergy(const FockOperators& ops);
FockVector trial_state_selfenergy(const FockBasis& basis, const ModelParams& params);

double rayleigh_quotient(const SparseOp& op, const FockVector& v);

struct EnergyReport {
  double e = 0.0, z = 0.0, lambda = 0.0, ir_shift = 0.0;
  double E_at = 0.0;
  std::optional<quad::QuadResult> a4, b1, b2, b3;
  std::optional<MatrixCoefficients> matrix;
  double E0_expansion = 0.0;
  std::optional<double> E0_lanczos;
  std::optional<double> E0_trial;
  double E_bin_expansion = 0.0;
  std::map<std::string, double> residuals;
};

struct SelfEnergyOptions {
  std::size_t grid_points = 48;       // per axis of the reduced a4 rule
  std::size_t mc_budget = 1'000'000;  // samples for each of b1, b2, b3
  std::uint64_t seed = 7;
  std::size_t workers = 0;            // 0 reads NELSON_WORKERS
  bool matrix_path = true;            // cross-check on `basis`
  bool lanczos = true;                // E0_lanczos and E0_trial on `basis`
  BasisSpec basis;
  double lanczos_tol = 1e-13;
  std::size_t lanczos_max_iter = 3000;
  // Values computed elsewhere (for example a cache) replace the evaluation.
  std::optional<quad::QuadResult> a4, b1, b2, b3;
  std::optional<MatrixCoefficients> matrix;
};

/// a4 by the reduced grid rule, b1..b3 by Monte Carlo, assembled with the
/// signs (-1, -4, -4, +2). Needs a finite cutoff.
EnergyReport self_energy_expansion(const ModelParams& params, const SelfEnergyOptions& options = {});

/// The radiative integral I(lambda) = (1 / 6 pi^2) (1 - (1 + lambda)^-2).
double binding_integral_closed(double lambda);
/// Same, by adaptive quadrature of (4/3)(2 pi)^-3 4 pi int dk 1 / (2 (1+k)^3).
quad::QuadResult binding_integral_quad(double lambda, double tol = 1e-15);

/// E_bin = -E_at (1 + e^2 I(lambda)); lambda may be infinite.
EnergyReport binding_expansion(const ModelParams& params);

/// Result of the same-basis order test.
struct OrderFit {
  std::vector<double> couplings;
  std::vector<double> residuals;  // |E0_lanczos + e^4 a4 + 4 e^6 b1 + 4 e^6 b2 - 2 e^6 b3|
  std::vector<double> energies;   // E0_lanczos
  double slope = 0.0;             // least-squares slope of log residual vs log e
  MatrixCoefficients coefficients;
};

/// Lanczos ground energies of T on `basis` for each coupling, compared with
/// the expansion built from same-basis coefficients.
OrderFit order_reproduction(const FockBasis& basis, const ModelParams& params, const std::vector<double>& couplings,
                            double lanczos_tol = 1e-13, std::uint64_t seed = 1);

/// Least-squares slope of log(y) against log(x); non-positive y are skipped.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace nelson
