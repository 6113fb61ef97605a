#include "nelson/lanczos.hpp"

#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

namespace nelson {

LanczosResult lanczos_smallest(const LinearOperator& op, std::size_t dim, const LanczosOptions& options) {
  if (dim == 0) throw ValidationError("lanczos: empty operator");
  const auto n = static_cast<Eigen::Index>(dim);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  FockVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(rng);
  v.normalize();

  std::vector<FockVector> basis;
  std::vector<double> alpha, beta;
  const std::size_t max_iter = std::min(options.max_iter, dim);
  double spectral_radius = 0.0;
  double best_value = 0.0, best_residual = kInf;
  Eigen::VectorXd ritz;

  for (std::size_t j = 0; j < max_iter; ++j) {
    basis.push_back(v);
    FockVector w = op(v);
    const double a = v.dot(w).real();
    alpha.push_back(a);
    w -= a * v;
    if (j > 0) w -= beta.back() * basis[j - 1];
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) w -= q.dot(w) * q;
    }
    const double b = w.norm();
    const std::size_t k_now = alpha.size();
    const bool last = j + 1 == max_iter || j + 1 == dim || b == 0.0;
    if (!(k_now <= 40 || k_now % 8 == 0 || last)) {
      beta.push_back(b);
      v = w / b;
      continue;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
    Eigen::VectorXd sub = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    tri.computeFromTridiagonal(d, sub, Eigen::ComputeEigenvectors);
    const Eigen::Index k = d.size();
    spectral_radius = std::max(spectral_radius, tri.eigenvalues().cwiseAbs().maxCoeff());
    const double residual = b * std::abs(tri.eigenvectors()(k - 1, 0));
    best_value = tri.eigenvalues()(0);
    best_residual = residual;
    const double scale = std::max(spectral_radius, std::numeric_limits<double>::min());
    const bool exhausted = j + 1 == dim || b <= 1e-14 * scale;
    if (residual <= options.tol * scale || exhausted) {
      ritz = tri.eigenvectors().col(0);
      break;
    }
    beta.push_back(b);
    v = w / b;
  }
  if (ritz.size() == 0) {
    std::ostringstream msg;
    msg << "lanczos: no convergence in " << max_iter << " iterations (residual " << best_residual << ")";
    throw ConvergenceError(msg.str(), best_value, best_residual);
  }

  FockVector y = FockVector::Zero(n);
  for (Eigen::Index i = 0; i < ritz.size(); ++i) y += ritz(i) * basis[static_cast<std::size_t>(i)];
  y.normalize();
  const FockVector oy = op(y);
  LanczosResult out;
  out.value = y.dot(oy).real();
  out.residual = (oy - out.value * y).norm();
  out.vector = std::move(y);
  out.iterations = static_cast<std::size_t>(ritz.size());
  return out;
}

LanczosResult lanczos_largest(const LinearOperator& op, std::size_t dim, const LanczosOptions& options) {
  LanczosResult r = lanczos_smallest([&op](const FockVector& x) -> FockVector { return -op(x); }, dim, options);
  r.value = -r.value;
  return r;
}

LanczosResult lanczos_ground(const SparseOp& op, double tol, std::size_t max_iter, std::uint64_t seed) {
  if (op.dim() == 0) throw ValidationError("lanczos: empty operator");
  if (!op.hermitian()) throw ValidationError("lanczos_ground needs a Hermitian operator");
  if (op.is_diagonal()) {
    const Eigen::VectorXd d = op.real_diagonal();
    Eigen::Index imin = 0;
    d.minCoeff(&imin);
    LanczosResult out;
    out.value = d(imin);
    out.vector = FockVector::Zero(d.size());
    out.vector(imin) = 1.0;
    return out;
  }
  return lanczos_smallest([&op](const FockVector& x) { return op.apply(x); }, op.dim(), {tol, max_iter, seed});
}

}  // namespace nelson
