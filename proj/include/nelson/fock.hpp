#pragma once

#include <cstdint>
#include <iosfwd>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nelson/modes.hpp"

namespace nelson {

using FockVector = Eigen::VectorXcd;

/// Canonical occupation-number state: (mode, count) pairs sorted by mode,
/// counts positive.
struct OccupationState {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> occupations;

  std::uint32_t total() const;
  bool operator==(const OccupationState&) const = default;
};

/// Truncated bosonic Fock basis over a mode grid, ordered by photon number
/// and then lexicographically by the sorted list of occupied mode indices.
/// The vacuum is ordinal 0.
class FockBasis {
 public:
  using Multiset = std::vector<std::uint16_t>;  // non-decreasing mode indices

  static constexpr std::size_t kDefaultDimensionCap = 4'000'000;

  FockBasis(ModeGrid grid, std::size_t n_max, std::size_t dimension_cap = kDefaultDimensionCap);

  const ModeGrid& grid() const { return grid_; }
  std::size_t n_max() const { return n_max_; }
  std::size_t dim() const { return states_.size(); }
  std::size_t modes() const { return grid_.size(); }

  const Multiset& multiset(std::size_t i) const { return states_[i]; }
  OccupationState state(std::size_t i) const;
  std::size_t photon_number(std::size_t i) const { return states_[i].size(); }

  /// Ordinal of a state, or npos when it lies outside the truncation.
  std::size_t index_of(const Multiset& m) const;
  std::size_t index_of(const OccupationState& s) const;

  /// First ordinal of each photon-number sector, plus dim() at the end.
  const std::vector<std::size_t>& sector_offsets() const { return sector_offsets_; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// sum_{n=0}^{n_max} C(m + n - 1, n), saturating at SIZE_MAX.
  static std::size_t dimension_for(std::size_t modes, std::size_t n_max);

 private:
  struct MultisetHash {
    std::size_t operator()(const Multiset& m) const noexcept;
  };

  ModeGrid grid_;
  std::size_t n_max_;
  std::vector<Multiset> states_;
  std::vector<std::size_t> sector_offsets_;
  std::unordered_map<Multiset, std::size_t, MultisetHash> index_;
};

FockBasis enumerate_basis(const ModeGrid& grid, std::size_t n_max,
                          std::size_t dimension_cap = FockBasis::kDefaultDimensionCap);

/// Sparse operator on a Fock basis.
///
/// Hermitian operators are stored as their upper triangle (diagonal
/// included) and the full matrix is rebuilt by conjugate reflection, so the
/// full matrix is exactly Hermitian. General operators (ladder parts) keep
/// all entries; their adjoint acts through the conjugate transpose.
class SparseOp {
 public:
  using Matrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor, std::int64_t>;
  using Triplet = Eigen::Triplet<Complex, std::int64_t>;

  SparseOp() = default;

  /// Duplicate entries are summed; entries below the diagonal are rejected.
  static SparseOp hermitian_from_upper(std::size_t dim, const std::vector<Triplet>& upper);
  /// Keeps the upper triangle of `m` and reflects it.
  static SparseOp hermitian_from_matrix(const Matrix& m);
  static SparseOp general(Matrix m);
  static SparseOp diagonal(const Eigen::VectorXd& d);

  std::size_t dim() const { return static_cast<std::size_t>(full_.rows()); }
  bool hermitian() const { return hermitian_; }
  const Matrix& matrix() const { return full_; }

  FockVector apply(const FockVector& v) const;
  FockVector apply_adjoint(const FockVector& v) const;
  SparseOp adjoint() const;

  /// Entries as stored: one triangle for Hermitian operators.
  std::vector<Triplet> stored_triplets() const;

  bool is_diagonal() const;
  Eigen::VectorXd real_diagonal() const;

  /// max |M_ij - conj(M_ji)|.
  double hermiticity_residual() const;

  /// Text dump: header "dim hermitian", then "row col re im" per stored entry.
  void write_text(std::ostream& out) const;
  static SparseOp read_text(std::istream& in);

 private:
  Matrix full_;
  bool hermitian_ = false;
};

/// Ladder parts of the smeared field: A_j annihilates with amplitude
/// sqrt(w_i) phi_j(k_i) sqrt(n_i); absA uses |phi(k_i)|.
struct FieldOps {
  std::array<SparseOp, 3> a;
  SparseOp abs_a;
};

/// Diagonal operators in the occupation basis. h_f includes the infrared
/// shift; d_f = |field momentum|^2 + h_f.
struct DiagonalOps {
  Eigen::VectorXd h_f;
  std::array<Eigen::VectorXd, 3> p;
  Eigen::VectorXd d_f;
};

/// Unsmeared annihilator a_i of one grid mode (unit amplitude sqrt(n_i)).
SparseOp mode_annihilator(const FockBasis& basis, std::size_t mode);

FieldOps smeared_field_ops(const FockBasis& basis, const ModelParams& params);
DiagonalOps diagonal_ops(const FockBasis& basis, const ModelParams& params);

/// T = H_f + P^2 + 2e(A*.P + P.A) + e^2(A*.A* + A.A + 2 A*.A).
SparseOp assemble_T(const FockBasis& basis, const ModelParams& params);
/// L = D_f + 2e^2 A*.A.
SparseOp assemble_L(const FockBasis& basis, const ModelParams& params);

/// Default kernel tolerance: 1e-14 times the largest |diagonal entry|.
double default_kernel_tol(const Eigen::VectorXd& diag);

/// Divides by the diagonal; entries with |d| <= kernel_tol map to zero. Only
/// the vacuum (ordinal 0) may fall in that kernel: any other near-zero entry
/// raises DegenerateGridError. kernel_tol < 0 selects the default.
FockVector apply_pseudo_inverse(const Eigen::VectorXd& diag, const FockVector& v, double kernel_tol = -1.0);

/// Everything needed to act with operator strings on one basis.
class FockOperators {
 public:
  FockOperators(const FockBasis& basis, const ModelParams& params);

  const FockBasis& basis() const { return *basis_; }
  const ModelParams& params() const { return params_; }
  const FieldOps& field() const { return field_; }
  const DiagonalOps& diag() const { return diag_; }
  std::size_t dim() const { return basis_->dim(); }
  double kernel_tol() const { return kernel_tol_; }

  FockVector vacuum() const;
  /// Reduced resolvent (1 - P_Omega) D_f^{-1}: the vacuum component is dropped
  /// also when the infrared shift makes D_f invertible there.
  FockVector resolvent(const FockVector& v) const;

 private:
  const FockBasis* basis_;
  ModelParams params_;
  FieldOps field_;
  DiagonalOps diag_;
  double kernel_tol_;
};

}  // namespace nelson
