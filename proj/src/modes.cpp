#include "nelson/modes.hpp"

#include <algorithm>

#include "nelson/quad.hpp"

namespace nelson {

namespace {

// (2 pi)^{-3}: square of the cutoff function inside the ball.
constexpr double kChiSq = 1.0 / (8.0 * kPi * kPi * kPi);
// 4 pi k^2 |phi|^2 = kRadial * k / (1 + k)^2.
constexpr double kRadial = 1.0 / (4.0 * kPi * kPi);

Estimate from_quad(const quad::QuadResult& r) { return {r.value, r.error, false}; }

// int_0^lambda g(k) dk with k = u^2 (u up to sqrt(lambda), or infinity).
quad::QuadResult radial_sqrt_substituted(const std::function<double(double)>& g, double lambda, double tol) {
  auto f = [&g](double u) { return g(u * u) * 2.0 * u; };
  return quad::integrate_1d(f, 0.0, std::isfinite(lambda) ? std::sqrt(lambda) : kInf, tol);
}

}  // namespace

ModelParams ModelParams::with_derived_shift(double e, double z, double lambda) {
  return {e, z, lambda, std::pow(e, 7)};
}

void ModelParams::validate() const {
  if (!(e >= 0.0) || !std::isfinite(e)) throw ValidationError("coupling e must be finite and >= 0");
  if (!(z >= 0.0) || !std::isfinite(z)) throw ValidationError("nuclear charge multiplier Z must be finite and >= 0");
  if (!(lambda > 0.0)) throw ValidationError("cutoff lambda must be > 0");
  if (!(ir_shift >= 0.0) || !std::isfinite(ir_shift)) throw ValidationError("infrared shift must be finite and >= 0");
}

double form_factor_sq(double k, double lambda) {
  if (!(k < lambda)) return 0.0;
  return kChiSq / (2.0 * k * (1.0 + k) * (1.0 + k));
}

double form_factor_magnitude(double k, double lambda) {
  if (!(k < lambda)) return 0.0;
  return std::sqrt(kChiSq / (2.0 * k)) / (1.0 + k);
}

Vec3 form_factor(const Vec3& k, const ModelParams& params) {
  const double kabs = norm(k);
  if (kabs == 0.0) throw SingularInputError("form factor is singular at k = 0");
  if (!(kabs < params.lambda)) return {0.0, 0.0, 0.0};
  // chi (2|k|)^{-1/2} / (|k| + |k|^2), times k.
  const double scale = std::sqrt(kChiSq / (2.0 * kabs)) / (kabs + kabs * kabs);
  return scale * k;
}

double phi_norm_sq_closed_form(double lambda) {
  if (!std::isfinite(lambda)) return kInf;
  return kRadial * (std::log1p(lambda) - lambda / (1.0 + lambda));
}

double c_II_closed_form(double lambda) {
  if (!std::isfinite(lambda)) return kRadial;
  return kRadial * lambda / (1.0 + lambda);
}

ConstantsReport coupling_constants(const ModelParams& params, double tol) {
  params.validate();
  const double lambda = params.lambda;
  ConstantsReport out;

  out.c_II = from_quad(radial_sqrt_substituted([](double k) { return kRadial / ((1 + k) * (1 + k)); }, lambda, tol));
  out.c_A = out.c_II;
  out.c_I = from_quad(
      radial_sqrt_substituted([](double k) { return kRadial * std::sqrt(k) / ((1 + k) * (1 + k)); }, lambda, tol));

  if (params.finite_cutoff()) {
    out.phi_norm_sq =
        from_quad(radial_sqrt_substituted([](double k) { return kRadial * k / ((1 + k) * (1 + k)); }, lambda, tol));
  } else {
    out.phi_norm_sq = Estimate::diverges();
  }

  // The e^7 shift regularizes the 1/k behaviour at the origin. With
  // k = eps (exp(s) - 1) the factor dk / (k + eps) becomes ds.
  const double eps = std::pow(params.e, 7);
  if (eps > 0.0) {
    auto g = [eps](double s) {
      const double k = eps * std::expm1(s);
      return kRadial / ((1 + k) * (1 + k));
    };
    const double s_max = std::isfinite(lambda) ? std::log1p(lambda / eps) : kInf;
    out.c_eps = from_quad(quad::integrate_1d(g, 0.0, s_max, tol));
  } else {
    out.c_eps = Estimate::diverges();
  }
  return out;
}

Estimate inverse_power_moment(double s, double lambda, double tol) {
  if (!(s > 0.0 && s < 1.0)) throw ValidationError("inverse_power_moment needs s in (0, 1)");
  if (!(lambda > 0.0)) throw ValidationError("cutoff lambda must be > 0");
  // Radial integrand kRadial k^{1-2s} / (1+k)^2. Below k = 1 use
  // k = w^{1/(2-2s)}, above it k = 1/v with v = w^{1/(2s)}; both make the
  // transformed integrand bounded.
  const double lower_exp = 1.0 / (2.0 - 2.0 * s);
  const double upper_exp = 1.0 / (2.0 * s);
  auto lower = [&](double w) {
    const double k = std::pow(w, lower_exp);
    return kRadial * lower_exp / ((1 + k) * (1 + k));
  };
  auto upper = [&](double w) {
    const double v = std::pow(w, upper_exp);
    return kRadial * upper_exp / ((1 + v) * (1 + v));
  };
  const double k_split = std::min(1.0, lambda);
  quad::QuadResult lo = quad::integrate_1d(lower, 0.0, std::pow(k_split, 2.0 - 2.0 * s), tol);
  Estimate out{lo.value, lo.error, false};
  if (lambda > 1.0) {
    const double w_min = std::isfinite(lambda) ? std::pow(1.0 / lambda, 2.0 * s) : 0.0;
    quad::QuadResult hi = quad::integrate_1d(upper, w_min, 1.0, tol);
    out.value += hi.value;
    *out.error += hi.error;
  }
  return out;
}

ModeGrid build_mode_grid(std::size_t n_radial, std::size_t n_angular, const ModelParams& params) {
  if (n_radial < 1) throw ValidationError("build_mode_grid needs n_radial >= 1");
  if (n_angular < 2) throw ValidationError("build_mode_grid needs n_angular >= 2");
  if (!params.finite_cutoff() || !(params.lambda > 0.0)) {
    throw ValidationError("mode grids need a finite cutoff lambda > 0");
  }
  const double lambda = params.lambda;
  const std::size_t n_polar = (n_angular + 1) / 2;
  const std::size_t n_azimuth = n_angular;

  const quad::GaussRule radial = quad::gauss_legendre(n_radial, 0.0, 1.0);
  const quad::GaussRule polar = quad::gauss_legendre(n_polar, -1.0, 1.0);
  const double azimuth_weight = 2.0 * kPi / static_cast<double>(n_azimuth);

  ModeGrid grid;
  grid.meta = {n_radial, n_polar, n_azimuth, lambda, "k=lambda*u^2"};
  grid.nodes.reserve(n_radial * n_polar * n_azimuth);
  for (std::size_t r = 0; r < n_radial; ++r) {
    const double u = radial.nodes[r];
    const double k = lambda * u * u;
    const double radial_weight = radial.weights[r] * 2.0 * lambda * u * k * k;
    for (std::size_t p = 0; p < n_polar; ++p) {
      const double c = polar.nodes[p];
      const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
      for (std::size_t a = 0; a < n_azimuth; ++a) {
        const double angle = azimuth_weight * static_cast<double>(a);
        grid.nodes.push_back({k * s * std::cos(angle), k * s * std::sin(angle), k * c});
        grid.magnitudes.push_back(k);
        grid.weights.push_back(radial_weight * polar.weights[p] * azimuth_weight);
      }
    }
  }
  return grid;
}

Complex weighted_overlap(std::span<const Complex> f, std::span<const Complex> g, const ModeGrid& grid) {
  if (f.size() != grid.size() || g.size() != grid.size()) {
    throw ValidationError("weighted_overlap: samples do not match the grid size");
  }
  Complex acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) acc += grid.weights[i] * std::conj(f[i]) * g[i];
  return acc;
}

}  // namespace nelson
