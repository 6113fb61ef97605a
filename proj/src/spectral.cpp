#include "nelson/spectral.hpp"

#include <cmath>

namespace nelson {

double atomic_energy(double e, double z) {
  const double x = z * e * e / (4.0 * kPi);
  return -0.25 * x * x;
}

HydrogenRef hydrogen_ground(const ModelParams& params) {
  params.validate();
  if (!(params.z > 0.0) || !(params.e > 0.0)) throw ValidationError("hydrogen_ground needs Z > 0 and e > 0");
  HydrogenRef ref;
  ref.gamma = params.z * params.e * params.e / (8.0 * kPi);
  ref.E_at = -ref.gamma * ref.gamma;
  ref.p2_moment = -2.0 * ref.E_at;
  return ref;
}

double MatrixCoefficients::expansion(double e) const {
  const double e4 = e * e * e * e;
  const double e6 = e4 * e * e;
  return 0.0 + wick::kExpansionSigns.a4 * e4 * a4 + e6 * (wick::kExpansionSigns.b1 * b1 + wick::kExpansionSigns.b2 * b2 +
                                                    wick::kExpansionSigns.b3 * b3);
}

MatrixCoefficients matrix_path_coefficients(const FockOperators& ops) {
  const auto vevs = wick::builtin_vevs();
  MatrixCoefficients c;
  c.a4 = wick::matrix_vev(vevs.at("a4"), ops);
  c.b1 = wick::matrix_vev(vevs.at("b1"), ops);
  c.b2 = wick::matrix_vev(vevs.at("b2"), ops);
  c.b3 = wick::matrix_vev(vevs.at("b3"), ops);
  return c;
}

FockVector trial_state_selfenergy(const FockOperators& ops) {
  if (ops.basis().n_max() < 3) throw ValidationError("trial state needs N_max >= 3");
  const double e = ops.params().e;
  const FockVector omega = ops.vacuum();
  const FockVector pair = wick::apply_string(wick::OpString::parse("R A*A*"), ops, omega);
  const FockVector down = wick::apply_string(wick::OpString::parse("R PA"), ops, pair);
  const FockVector up = wick::apply_string(wick::OpString::parse("R A*P"), ops, pair);
  return omega - (e * e) * pair - (2.0 * e * e * e) * (down + up);
}

FockVector trial_state_selfenergy(const FockBasis& basis, const ModelParams& params) {
  return trial_state_selfenergy(FockOperators(basis, params));
}

double rayleigh_quotient(const SparseOp& op, const FockVector& v) {
  const double nn = v.squaredNorm();
  if (!(nn > 0.0)) throw ValidationError("Rayleigh quotient of the zero vector");
  return v.dot(op.apply(v)).real() / nn;
}

double binding_integral_closed(double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("cutoff lambda must be > 0");
  if (!std::isfinite(lambda)) return 1.0 / (6.0 * kPi * kPi);
  const double s = 1.0 + lambda;
  return (1.0 - 1.0 / (s * s)) / (6.0 * kPi * kPi);
}

quad::QuadResult binding_integral_quad(double lambda, double tol) {
  if (!(lambda > 0.0)) throw ValidationError("cutoff lambda must be > 0");
  const double prefactor = (4.0 / 3.0) / (8.0 * kPi * kPi * kPi) * 4.0 * kPi;
  auto f = [prefactor](double k) {
    const double s = 1.0 + k;
    return prefactor / (2.0 * s * s * s);
  };
  return quad::integrate_1d(f, 0.0, lambda, tol);
}

EnergyReport binding_expansion(const ModelParams& params) {
  params.validate();
  EnergyReport r;
  r.e = params.e;
  r.z = params.z;
  r.lambda = params.lambda;
  r.ir_shift = params.ir_shift;
  r.E_at = atomic_energy(params.e, params.z);
  const double closed = binding_integral_closed(params.lambda);
  const quad::QuadResult q = binding_integral_quad(params.lambda);
  r.residuals["I_closed"] = closed;
  r.residuals["I_quad"] = q.value;
  r.residuals["I_quad_err"] = q.error;
  r.residuals["I_quad_minus_closed"] = q.value - closed;
  r.E_bin_expansion = -r.E_at * (1.0 + params.e * params.e * closed);
  return r;
}

EnergyReport self_energy_expansion(const ModelParams& params, const SelfEnergyOptions& options) {
  params.validate();
  if (!params.finite_cutoff()) throw ValidationError("the self-energy expansion needs a finite cutoff");
  EnergyReport r = binding_expansion(params);

  const auto vevs = wick::builtin_vevs();
  auto mc = [&](const char* name) {
    return quad::integrate_mc(wick::vev_integrand(vevs.at(name), params), options.mc_budget, options.seed, params,
                              options.workers);
  };
  r.a4 = options.a4 ? *options.a4
                    : quad::integrate_grid3d(quad::reduce_two_photon(wick::vev_integrand(vevs.at("a4"), params), params),
                                             options.grid_points);
  r.b1 = options.b1 ? *options.b1 : mc("b1");
  r.b2 = options.b2 ? *options.b2 : mc("b2");
  r.b3 = options.b3 ? *options.b3 : mc("b3");
  const MatrixCoefficients continuum{r.a4->value, r.b1->value, r.b2->value, r.b3->value};
  r.E0_expansion = continuum.expansion(params.e);

  if (options.matrix_path || options.lanczos) {
    const ModeGrid grid = build_mode_grid(options.basis.n_radial, options.basis.n_angular, params);
    const FockBasis basis(grid, options.basis.n_max);
    const FockOperators ops(basis, params);
    if (options.matrix_path) {
      r.matrix = options.matrix ? *options.matrix : matrix_path_coefficients(ops);
      r.residuals["a4_grid_minus_matrix"] = continuum.a4 - r.matrix->a4;
      r.residuals["b1_mc_minus_matrix"] = continuum.b1 - r.matrix->b1;
      r.residuals["b2_mc_minus_matrix"] = continuum.b2 - r.matrix->b2;
      r.residuals["b3_mc_minus_matrix"] = continuum.b3 - r.matrix->b3;
    }
    if (options.lanczos) {
      const SparseOp t = assemble_T(basis, params);
      const LanczosResult ground = lanczos_ground(t, options.lanczos_tol, options.lanczos_max_iter, options.seed);
      r.E0_lanczos = ground.value;
      r.E0_trial = rayleigh_quotient(t, trial_state_selfenergy(ops));
      r.residuals["trial_minus_lanczos"] = *r.E0_trial - ground.value;
      r.residuals["lanczos_residual"] = ground.residual;
      if (r.matrix) r.residuals["lanczos_minus_matrix_expansion"] = ground.value - r.matrix->expansion(params.e);
    }
  }
  return r;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("loglog_slope: size mismatch");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / denom;
}

OrderFit order_reproduction(const FockBasis& basis, const ModelParams& params, const std::vector<double>& couplings,
                            double lanczos_tol, std::uint64_t seed) {
  OrderFit fit;
  fit.couplings = couplings;
  {
    ModelParams p0 = params;
    p0.e = 0.0;
    fit.coefficients = matrix_path_coefficients(FockOperators(basis, p0));
  }
  for (double e : couplings) {
    ModelParams p = params;
    p.e = e;
    const SparseOp t = assemble_T(basis, p);
    const double energy = lanczos_ground(t, lanczos_tol, 5000, seed).value;
    fit.energies.push_back(energy);
    fit.residuals.push_back(std::abs(energy - fit.coefficients.expansion(e)));
  }
  fit.slope = loglog_slope(fit.couplings, fit.residuals);
  return fit;
}

}  // namespace nelson
