#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nelson/lanczos.hpp"
#include "nelson/wick.hpp"

namespace nelson {

/// Outcome of checking M <= alpha + c N (or a Gram-type bound) on a basis.
struct FormBoundReport {
  std::string lemma_id;
  double alpha = 0.0;
  double c_star = 0.0;
  double margin = 0.0;
  std::string grid_level;
  double lambda = 0.0;
  bool unbounded = false;
  // Gram-type checks only.
  std::size_t gram_draws = 0;
  std::size_t gram_violations = 0;
  // Reference bound where one is known in closed form on the grid (hlt1 i).
  std::optional<double> reference_bound;

  bool passed(double tol = 1e-10) const;
};

struct FormBoundOptions {
  double lanczos_tol = 1e-12;
  std::size_t max_iter = 3000;
  std::uint64_t seed = 11;
  std::string lemma_id = "custom";
  std::string grid_level;
  double lambda = 0.0;
};

/// Minimal c with M - alpha <= c N for a diagonal N >= 0, computed as the
/// top eigenvalue of N^{-1/2} (M - alpha) N^{-1/2} on N's positive subspace.
/// The kernel of N is folded in through a Schur complement; a kernel
/// direction on which M - alpha is positive (or couples to the rest without
/// a negative diagonal block) makes the constant unbounded, which is flagged.
/// The margin is the smallest eigenvalue of alpha + c_star N - M.
FormBoundReport minimal_form_constant(const LinearOperator& m, const Eigen::VectorXd& n_diag, double alpha,
                                      const FormBoundOptions& options = {});

/// Same for sparse operators. N must be diagonal.
FormBoundReport minimal_form_constant(const SparseOp& m, const SparseOp& n, double alpha,
                                      const FormBoundOptions& options = {});

/// Operator string acting on a basis through an extended basis that holds
/// every intermediate photon number, then projected back: the exact
/// compression of the untruncated operator, stored as a sparse matrix.
class CompressedString {
 public:
  CompressedString(const FockBasis& basis, const ModelParams& params, const wick::OpString& s);
  /// Reuses operators on an extended basis over the same grid with
  /// N_max >= basis.n_max() + extension_depth(s). The basis behind
  /// `extended` must outlive this object.
  CompressedString(const FockBasis& basis, std::shared_ptr<const FockOperators> extended, const wick::OpString& s);

  FockVector apply(const FockVector& v) const;
  FockVector apply_adjoint(const FockVector& v) const;
  const SparseOp::Matrix& matrix() const { return matrix_; }
  /// <Omega| s |Omega> on the extended basis.
  double vacuum_value() const;
  std::size_t dim() const { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t extended_dim() const { return ops_->dim(); }

  /// Extra photon sectors needed beyond N_max for `s`.
  static std::size_t extension_depth(const wick::OpString& s);

 private:
  void build(const FockBasis& basis);

  wick::OpString string_;
  std::shared_ptr<const FockBasis> owned_basis_;
  std::shared_ptr<const FockOperators> ops_;
  SparseOp::Matrix matrix_;
};

struct LemmaSuiteOptions {
  std::size_t gram_draws = 1000;
  std::uint64_t seed = 11;
  std::string grid_level;
  double lanczos_tol = 1e-12;
  /// Lemma ids to run; empty runs all.
  std::vector<std::string> only;
};

/// she1, she2, she2b, she3, she4(i), she4(ii), hlt1(i), hlt1(ii). Needs N_max >= 3.
std::vector<FormBoundReport> lemma_suite(const FockBasis& basis, const ModelParams& params,
                                         const LemmaSuiteOptions& options = {});

/// Max entry of 1/L - [1/D - 2e^2 (1+delta) D^-1 A*A D^-1 + 4e^4 D^-1 A*A L^-1 A*A D^-1]
/// on the vacuum complement (dense; dim <= 4000). `delta` perturbs the
/// first-order coefficient so the check can be seen to fail.
double verify_resolvent_identity(const FockBasis& basis, const ModelParams& params, double delta = 0.0);

struct CEpsBound {
  double value = 0.0;      // c(e) at the requested e
  double error = 0.0;
  double prefactor = 0.0;  // slope of c(e) against ln(1/e) over e = 1e-1, 1e-2, 1e-3
  double intercept = 0.0;
  double c_II = 0.0;
};

CEpsBound bound_c_eps(double e, double lambda);

}  // namespace nelson
