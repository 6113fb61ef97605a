#include "nelson/quad.hpp"

#include <algorithm>
#include <queue>
#include <random>
#include <sstream>

#include "nelson/parallel.hpp"

namespace nelson::quad {

namespace {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

Panel gauss_kronrod(const Function1d& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    kronrod += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) gauss += kWg[j / 2] * (f1 + f2);
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

double legendre_and_derivative(std::size_t n, double x, double& dp) {
  double p0 = 1.0, p1 = x;
  if (n == 0) {
    dp = 0.0;
    return 1.0;
  }
  for (std::size_t k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
    p0 = p1;
    p1 = p2;
  }
  dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
  return p1;
}

double uniform01(std::mt19937_64& rng) {
  // 53 random bits, centred in the cell: never exactly 0 or 1.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Small-k series of log1p(k) - k/(1+k) avoids the cancellation.
double radial_cdf_unnormalized(double k) {
  if (k < 1e-3) {
    double term = k * k;
    double sum = 0.0;
    for (int n = 2; n < 10; ++n) {
      sum += (n % 2 == 0 ? 1.0 : -1.0) * (1.0 - 1.0 / n) * term;
      term *= k;
    }
    return sum;
  }
  return std::log1p(k) - k / (1.0 + k);
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::Adaptive1d: return "adaptive1d";
    case Method::Grid3d: return "grid3d";
    case Method::MonteCarlo: return "mc";
    case Method::Matrix: return "matrix";
  }
  return "unknown";
}

GaussRule gauss_legendre(std::size_t n, double a, double b) {
  if (n == 0) throw ValidationError("gauss_legendre needs n >= 1");
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  if (n == 1) {
    rule.nodes[0] = mid;
    rule.weights[0] = 2.0 * half;
    return rule;
  }
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double p = legendre_and_derivative(n, x, dp);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre_and_derivative(n, x, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    // Ascending order: node i from the right end is n-1-i.
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = rule.weights[n - 1 - i] = w * half;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = mid;
  return rule;
}

QuadResult integrate_1d(const Function1d& f, double a, double b, double tol, std::size_t max_panels) {
  if (!(a < b)) throw ValidationError("integrate_1d needs a < b");
  if (!std::isfinite(a)) throw ValidationError("integrate_1d needs a finite lower limit");

  Function1d g = f;
  double lo = a, hi = b;
  if (!std::isfinite(b)) {
    g = [&f, a](double t) {
      const double s = 1.0 - t;
      return f(a + t / s) / (s * s);
    };
    lo = 0.0;
    hi = 1.0;
  }

  std::priority_queue<Panel> panels;
  Panel first = gauss_kronrod(g, lo, hi);
  double total = first.value;
  double total_error = first.error;
  panels.push(first);
  std::size_t evals = 15;

  while (total_error > tol) {
    if (panels.size() >= max_panels) {
      std::ostringstream msg;
      msg << "integrate_1d: panel budget exhausted with error estimate " << total_error << " > " << tol;
      throw ConvergenceError(msg.str(), total, total_error);
    }
    Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      throw ConvergenceError("integrate_1d: panel width below machine resolution", total, total_error);
    }
    Panel left = gauss_kronrod(g, worst.a, mid);
    Panel right = gauss_kronrod(g, mid, worst.b);
    evals += 30;
    total += left.value + right.value - worst.value;
    total_error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    if (panels.size() % 64 == 0) {
      // Re-sum to shed accumulated cancellation in the running totals.
      auto copy = panels;
      total = 0.0;
      total_error = 0.0;
      while (!copy.empty()) {
        total += copy.top().value;
        total_error += copy.top().error;
        copy.pop();
      }
    }
  }
  if (!std::isfinite(total)) throw ConvergenceError("integrate_1d: non-finite integral", total, total_error);
  return {total, total_error, evals, Method::Adaptive1d, std::nullopt};
}

ReducedTwoPhoton::ReducedTwoPhoton(IntegrandExpr expr, ModelParams params)
    : expr_(std::move(expr)), params_(params) {}

double ReducedTwoPhoton::operator()(double k1, double k2, double u) const {
  const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
  const Vec3 k[2] = {{0.0, 0.0, k1}, {k2 * s, 0.0, k2 * u}};
  return 8.0 * kPi * kPi * k1 * k1 * k2 * k2 * expr_.evaluate(k, params_);
}

ReducedTwoPhoton reduce_two_photon(const IntegrandExpr& expr, const ModelParams& params) {
  if (expr.n_vars != 2) throw ValidationError("reduce_two_photon needs exactly two momentum variables");
  return ReducedTwoPhoton(expr, params);
}

namespace {

double tensor_rule(const ReducedTwoPhoton& f, std::size_t n) {
  const double lambda = f.params().lambda;
  const GaussRule s = gauss_legendre(n, 0.0, 1.0);
  const GaussRule u = gauss_legendre(n, -1.0, 1.0);
  std::vector<double> k(n), wk(n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i] = lambda * s.nodes[i] * s.nodes[i];
    wk[i] = s.weights[i] * 2.0 * lambda * s.nodes[i];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double inner = 0.0;
      for (std::size_t m = 0; m < n; ++m) inner += u.weights[m] * f(k[i], k[j], u.nodes[m]);
      total += wk[i] * wk[j] * inner;
    }
  }
  return total;
}

}  // namespace

QuadResult integrate_grid3d(const ReducedTwoPhoton& f, std::size_t n) {
  if (n < 2) throw ValidationError("integrate_grid3d needs n >= 2");
  if (!f.params().finite_cutoff()) throw ValidationError("integrate_grid3d needs a finite cutoff");
  const double fine = tensor_rule(f, n);
  const double coarse = tensor_rule(f, n / 2);
  const std::size_t evals = n * n * n + (n / 2) * (n / 2) * (n / 2);
  return {fine, std::abs(fine - coarse), evals, Method::Grid3d, std::nullopt};
}

RadialSampler::RadialSampler(double lambda) : lambda_(lambda) {
  if (!std::isfinite(lambda) || !(lambda > 0.0)) {
    throw ValidationError("importance sampling needs a finite cutoff lambda > 0");
  }
  total_ = radial_cdf_unnormalized(lambda);
  constexpr std::size_t kTable = 2048;
  table_k_.resize(kTable + 1);
  table_f_.resize(kTable + 1);
  for (std::size_t j = 0; j <= kTable; ++j) {
    const double t = static_cast<double>(j) / kTable;
    table_k_[j] = lambda * t * t;
    table_f_[j] = radial_cdf_unnormalized(table_k_[j]) / total_;
  }
  table_k_.back() = lambda;
  table_f_.back() = 1.0;
}

double RadialSampler::cdf(double k) const { return radial_cdf_unnormalized(k) / total_; }

double RadialSampler::sample(double uniform) const {
  auto it = std::upper_bound(table_f_.begin(), table_f_.end(), uniform);
  std::size_t j = static_cast<std::size_t>(std::distance(table_f_.begin(), it));
  j = std::clamp<std::size_t>(j, 1, table_f_.size() - 1);
  double lo = table_k_[j - 1], hi = table_k_[j];
  double k = 0.5 * (lo + hi);
  // Safeguarded Newton on cdf(k) = uniform inside the bracket.
  for (int it2 = 0; it2 < 60; ++it2) {
    const double r = cdf(k) - uniform;
    if (r > 0) hi = k;
    else lo = k;
    const double slope = k / ((1 + k) * (1 + k)) / total_;
    double next = slope > 0 ? k - r / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - k) <= 1e-15 * std::max(k, 1e-300)) {
      k = next;
      break;
    }
    k = next;
  }
  return k;
}

double RadialSampler::density(double k) const {
  // |phi|^2 / ||phi||^2 with ||phi||^2 = total / (4 pi^2).
  return form_factor_sq(k, lambda_) * 4.0 * kPi * kPi / total_;
}

QuadResult integrate_mc(const IntegrandExpr& expr, std::size_t budget, std::uint64_t seed, const ModelParams& params,
                        std::size_t workers) {
  params.validate();
  if (budget < 10000) throw ValidationError("integrate_mc needs a budget of at least 10^4 samples");
  if (expr.n_vars < 1) throw ValidationError("integrate_mc needs at least one momentum variable");
  const RadialSampler sampler(params.lambda);
  if (workers == 0) workers = default_workers();

  const std::size_t n_chunks = (budget + kMonteCarloChunk - 1) / kMonteCarloChunk;
  struct ChunkStats {
    double count = 0, mean = 0, m2 = 0;
  };
  std::vector<ChunkStats> stats(n_chunks);
  const auto nv = static_cast<std::size_t>(expr.n_vars);

  parallel_for(n_chunks, workers, [&](std::size_t c) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(c + 0x5bd1e995ULL)));
    const std::size_t begin = c * kMonteCarloChunk;
    const std::size_t end = std::min(budget, begin + kMonteCarloChunk);
    std::vector<Vec3> k(nv);
    ChunkStats s;
    for (std::size_t i = begin; i < end; ++i) {
      double inv_density = 1.0;
      for (std::size_t v = 0; v < nv; ++v) {
        const double r = sampler.sample(uniform01(rng));
        const double cos_t = 2.0 * uniform01(rng) - 1.0;
        const double az = 2.0 * kPi * uniform01(rng);
        const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
        k[v] = {r * sin_t * std::cos(az), r * sin_t * std::sin(az), r * cos_t};
        inv_density /= sampler.density(r);
      }
      const double x = expr.evaluate(k, params) * inv_density;
      if (!std::isfinite(x)) {
        std::ostringstream msg;
        msg << "integrate_mc: non-finite sample " << i << " at momenta";
        for (const auto& kv : k) msg << " (" << kv[0] << ", " << kv[1] << ", " << kv[2] << ")";
        throw ValidationError(msg.str());
      }
      s.count += 1;
      const double delta = x - s.mean;
      s.mean += delta / s.count;
      s.m2 += delta * (x - s.mean);
    }
    stats[c] = s;
  });

  ChunkStats all;
  for (const auto& s : stats) {
    if (s.count == 0) continue;
    const double n = all.count + s.count;
    const double delta = s.mean - all.mean;
    all.mean += delta * s.count / n;
    all.m2 += s.m2 + delta * delta * all.count * s.count / n;
    all.count = n;
  }
  const double variance = all.count > 1 ? all.m2 / (all.count - 1) : 0.0;
  return {all.mean, std::sqrt(variance / all.count), budget, Method::MonteCarlo, seed};
}

}  // namespace nelson::quad
