#include "nelson/fock.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace nelson {

std::uint32_t OccupationState::total() const {
  std::uint32_t n = 0;
  for (const auto& [mode, count] : occupations) n += count;
  return n;
}

std::size_t FockBasis::MultisetHash::operator()(const Multiset& m) const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (auto v : m) {
    h ^= v;
    h *= 1099511628211ULL;
  }
  h ^= m.size();
  return static_cast<std::size_t>(h);
}

std::size_t FockBasis::dimension_for(std::size_t modes, std::size_t n_max) {
  constexpr auto kMax = std::numeric_limits<std::size_t>::max();
  unsigned __int128 total = 1;
  unsigned __int128 term = 1;
  for (std::size_t n = 1; n <= n_max; ++n) {
    term = term * (modes - 1 + n) / n;  // C(m+n-1, n), exact at every step
    total += term;
    if (total > kMax || term == 0) {
      if (total > kMax) return kMax;
      break;
    }
  }
  return static_cast<std::size_t>(total);
}

namespace {

void enumerate_sector(std::size_t modes, std::size_t n, std::size_t start, FockBasis::Multiset& current,
                      std::vector<FockBasis::Multiset>& out) {
  if (current.size() == n) {
    out.push_back(current);
    return;
  }
  for (std::size_t q = start; q < modes; ++q) {
    current.push_back(static_cast<std::uint16_t>(q));
    enumerate_sector(modes, n, q, current, out);
    current.pop_back();
  }
}

}  // namespace

FockBasis::FockBasis(ModeGrid grid, std::size_t n_max, std::size_t dimension_cap)
    : grid_(std::move(grid)), n_max_(n_max) {
  if (grid_.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw ValidationError("Fock basis supports at most 65535 modes");
  }
  const std::size_t dim = dimension_for(grid_.size(), n_max);
  if (dim > dimension_cap) {
    std::ostringstream msg;
    msg << "Fock basis dimension " << dim << " (modes=" << grid_.size() << ", N_max=" << n_max
        << ") exceeds the cap " << dimension_cap;
    throw DimensionOverflowError(msg.str(), dim);
  }
  states_.reserve(dim);
  sector_offsets_.reserve(n_max + 2);
  Multiset current;
  for (std::size_t n = 0; n <= n_max; ++n) {
    sector_offsets_.push_back(states_.size());
    enumerate_sector(grid_.size(), n, 0, current, states_);
  }
  sector_offsets_.push_back(states_.size());
  index_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) index_.emplace(states_[i], i);
}

OccupationState FockBasis::state(std::size_t i) const {
  OccupationState s;
  for (auto q : states_.at(i)) {
    if (!s.occupations.empty() && s.occupations.back().first == q) ++s.occupations.back().second;
    else s.occupations.emplace_back(q, 1);
  }
  return s;
}

std::size_t FockBasis::index_of(const Multiset& m) const {
  auto it = index_.find(m);
  return it == index_.end() ? npos : it->second;
}

std::size_t FockBasis::index_of(const OccupationState& s) const {
  Multiset m;
  std::uint32_t previous = 0;
  bool first = true;
  for (const auto& [mode, count] : s.occupations) {
    if (count == 0 || (!first && mode <= previous)) {
      throw ValidationError("occupation state is not canonical (sorted modes, positive counts)");
    }
    if (mode >= grid_.size()) return npos;
    m.insert(m.end(), count, static_cast<std::uint16_t>(mode));
    previous = mode;
    first = false;
  }
  return index_of(m);
}

FockBasis enumerate_basis(const ModeGrid& grid, std::size_t n_max, std::size_t dimension_cap) {
  return FockBasis(grid, n_max, dimension_cap);
}

// ---------------------------------------------------------------------------

SparseOp SparseOp::hermitian_from_upper(std::size_t dim, const std::vector<Triplet>& upper) {
  const auto n = static_cast<std::int64_t>(dim);
  std::vector<Triplet> full;
  full.reserve(2 * upper.size());
  for (const auto& t : upper) {
    if (t.row() < 0 || t.col() >= n || t.row() > t.col()) {
      throw ValidationError("hermitian_from_upper: entry outside the upper triangle");
    }
    if (t.row() == t.col()) {
      full.emplace_back(t.row(), t.col(), Complex(t.value().real(), 0.0));
    } else {
      full.emplace_back(t.row(), t.col(), t.value());
      full.emplace_back(t.col(), t.row(), std::conj(t.value()));
    }
  }
  SparseOp op;
  op.full_.resize(n, n);
  op.full_.setFromTriplets(full.begin(), full.end());
  op.full_.makeCompressed();
  op.hermitian_ = true;
  return op;
}

SparseOp SparseOp::hermitian_from_matrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw ValidationError("hermitian_from_matrix: matrix is not square");
  std::vector<Triplet> upper;
  upper.reserve(static_cast<std::size_t>(m.nonZeros()));
  for (std::int64_t r = 0; r < m.outerSize(); ++r) {
    for (Matrix::InnerIterator it(m, r); it; ++it) {
      if (it.col() >= it.row()) upper.emplace_back(it.row(), it.col(), it.value());
    }
  }
  return hermitian_from_upper(static_cast<std::size_t>(m.rows()), upper);
}

SparseOp SparseOp::general(Matrix m) {
  SparseOp op;
  op.full_ = std::move(m);
  op.full_.makeCompressed();
  op.hermitian_ = false;
  return op;
}

SparseOp SparseOp::diagonal(const Eigen::VectorXd& d) {
  std::vector<Triplet> upper;
  upper.reserve(static_cast<std::size_t>(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) upper.emplace_back(i, i, Complex(d(i), 0.0));
  return hermitian_from_upper(static_cast<std::size_t>(d.size()), upper);
}

FockVector SparseOp::apply(const FockVector& v) const {
  if (v.size() != full_.cols()) throw ValidationError("SparseOp::apply: vector size mismatch");
  return full_ * v;
}

FockVector SparseOp::apply_adjoint(const FockVector& v) const {
  if (v.size() != full_.rows()) throw ValidationError("SparseOp::apply_adjoint: vector size mismatch");
  if (hermitian_) return full_ * v;
  return full_.adjoint() * v;
}

SparseOp SparseOp::adjoint() const {
  if (hermitian_) return *this;
  return general(Matrix(full_.adjoint()));
}

std::vector<SparseOp::Triplet> SparseOp::stored_triplets() const {
  std::vector<Triplet> out;
  for (std::int64_t r = 0; r < full_.outerSize(); ++r) {
    for (Matrix::InnerIterator it(full_, r); it; ++it) {
      if (!hermitian_ || it.col() >= it.row()) out.emplace_back(it.row(), it.col(), it.value());
    }
  }
  return out;
}

bool SparseOp::is_diagonal() const {
  for (std::int64_t r = 0; r < full_.outerSize(); ++r) {
    for (Matrix::InnerIterator it(full_, r); it; ++it) {
      if (it.row() != it.col() && it.value() != Complex(0.0, 0.0)) return false;
    }
  }
  return true;
}

Eigen::VectorXd SparseOp::real_diagonal() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(full_.rows());
  for (std::int64_t r = 0; r < full_.outerSize(); ++r) {
    for (Matrix::InnerIterator it(full_, r); it; ++it) {
      if (it.row() == it.col()) d(it.row()) = it.value().real();
    }
  }
  return d;
}

double SparseOp::hermiticity_residual() const {
  Matrix diff = full_ - Matrix(full_.adjoint());
  double worst = 0.0;
  for (std::int64_t r = 0; r < diff.outerSize(); ++r) {
    for (Matrix::InnerIterator it(diff, r); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

void SparseOp::write_text(std::ostream& out) const {
  out << dim() << ' ' << (hermitian_ ? 1 : 0) << '\n';
  char buf[128];
  for (const auto& t : stored_triplets()) {
    std::snprintf(buf, sizeof buf, "%lld %lld %.17g %.17g\n", static_cast<long long>(t.row()),
                  static_cast<long long>(t.col()), t.value().real(), t.value().imag());
    out << buf;
  }
}

SparseOp SparseOp::read_text(std::istream& in) {
  std::size_t dim = 0;
  int hermitian = 0;
  if (!(in >> dim >> hermitian)) throw ValidationError("operator dump: malformed header");
  std::vector<Triplet> entries;
  long long r = 0, c = 0;
  double re = 0.0, im = 0.0;
  while (in >> r >> c >> re >> im) {
    if (r < 0 || c < 0 || static_cast<std::size_t>(r) >= dim || static_cast<std::size_t>(c) >= dim) {
      throw ValidationError("operator dump: entry index out of range");
    }
    entries.emplace_back(r, c, Complex(re, im));
  }
  if (!in.eof()) throw ValidationError("operator dump: malformed entry line");
  if (hermitian != 0) return hermitian_from_upper(dim, entries);
  Matrix m(static_cast<std::int64_t>(dim), static_cast<std::int64_t>(dim));
  m.setFromTriplets(entries.begin(), entries.end());
  return general(std::move(m));
}

// ---------------------------------------------------------------------------

namespace {

void check_grid(const FockBasis& basis, const ModelParams& params) {
  params.validate();
  if (basis.grid().meta.lambda != params.lambda) {
    throw ValidationError("basis grid was built for a different cutoff lambda");
  }
}

SparseOp::Matrix sparse_diagonal(const Eigen::VectorXd& d) {
  std::vector<SparseOp::Triplet> t;
  t.reserve(static_cast<std::size_t>(d.size()));
  for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, Complex(d(i), 0.0));
  SparseOp::Matrix m(d.size(), d.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

}  // namespace

SparseOp mode_annihilator(const FockBasis& basis, std::size_t mode) {
  if (mode >= basis.modes()) throw ValidationError("mode_annihilator: mode index out of range");
  const auto dim = static_cast<std::int64_t>(basis.dim());
  std::vector<SparseOp::Triplet> entries;
  FockBasis::Multiset reduced;
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const auto& m = basis.multiset(i);
    const auto first = std::find(m.begin(), m.end(), mode);
    if (first == m.end()) continue;
    const auto count = std::count(first, m.end(), static_cast<std::uint16_t>(mode));
    reduced.assign(m.begin(), m.end());
    reduced.erase(reduced.begin() + (first - m.begin()));
    entries.emplace_back(static_cast<std::int64_t>(basis.index_of(reduced)), static_cast<std::int64_t>(i),
                         Complex(std::sqrt(static_cast<double>(count)), 0.0));
  }
  SparseOp::Matrix a(dim, dim);
  a.setFromTriplets(entries.begin(), entries.end());
  return SparseOp::general(std::move(a));
}

FieldOps smeared_field_ops(const FockBasis& basis, const ModelParams& params) {
  check_grid(basis, params);
  const ModeGrid& grid = basis.grid();
  const auto dim = static_cast<std::int64_t>(basis.dim());
  std::array<std::vector<SparseOp::Triplet>, 3> comp;
  std::vector<SparseOp::Triplet> abs_entries;

  std::vector<Vec3> amp(grid.size());
  std::vector<double> abs_amp(grid.size());
  for (std::size_t q = 0; q < grid.size(); ++q) {
    const double sw = std::sqrt(grid.weights[q]);
    amp[q] = sw * form_factor(grid.nodes[q], params);
    abs_amp[q] = sw * form_factor_magnitude(grid.magnitudes[q], params.lambda);
  }

  FockBasis::Multiset reduced;
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    const auto& m = basis.multiset(i);
    for (std::size_t pos = 0; pos < m.size();) {
      const auto q = m[pos];
      std::size_t end = pos;
      while (end < m.size() && m[end] == q) ++end;
      const double count = static_cast<double>(end - pos);
      reduced.assign(m.begin(), m.end());
      reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(pos));
      const auto t = static_cast<std::int64_t>(basis.index_of(reduced));
      const double s = std::sqrt(count);
      for (int j = 0; j < 3; ++j) {
        if (amp[q][j] != 0.0) comp[j].emplace_back(t, static_cast<std::int64_t>(i), Complex(s * amp[q][j], 0.0));
      }
      abs_entries.emplace_back(t, static_cast<std::int64_t>(i), Complex(s * abs_amp[q], 0.0));
      pos = end;
    }
  }

  FieldOps out;
  for (int j = 0; j < 3; ++j) {
    SparseOp::Matrix a(dim, dim);
    a.setFromTriplets(comp[j].begin(), comp[j].end());
    out.a[j] = SparseOp::general(std::move(a));
  }
  SparseOp::Matrix abs_a(dim, dim);
  abs_a.setFromTriplets(abs_entries.begin(), abs_entries.end());
  out.abs_a = SparseOp::general(std::move(abs_a));
  return out;
}

DiagonalOps diagonal_ops(const FockBasis& basis, const ModelParams& params) {
  check_grid(basis, params);
  const ModeGrid& grid = basis.grid();
  const auto dim = static_cast<Eigen::Index>(basis.dim());
  DiagonalOps out;
  out.h_f = Eigen::VectorXd::Constant(dim, params.ir_shift);
  for (auto& p : out.p) p = Eigen::VectorXd::Zero(dim);
  out.d_f.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    double h = 0.0;
    Vec3 p{0.0, 0.0, 0.0};
    for (auto q : basis.multiset(static_cast<std::size_t>(i))) {
      h += grid.magnitudes[q];
      p = p + grid.nodes[q];
    }
    out.h_f(i) += h;
    for (int j = 0; j < 3; ++j) out.p[j](i) = p[j];
    out.d_f(i) = dot(p, p) + out.h_f(i);
  }
  return out;
}

SparseOp assemble_T(const FockBasis& basis, const ModelParams& params) {
  const FieldOps field = smeared_field_ops(basis, params);
  const DiagonalOps diag = diagonal_ops(basis, params);
  const double e = params.e;
  SparseOp::Matrix t = sparse_diagonal(diag.d_f);
  for (int j = 0; j < 3; ++j) {
    const SparseOp::Matrix& a = field.a[j].matrix();
    const SparseOp::Matrix a_dag = a.adjoint();
    const SparseOp::Matrix p = sparse_diagonal(diag.p[j]);
    const SparseOp::Matrix create_p = a_dag * p;   // A*_j P_j
    const SparseOp::Matrix pair = a * a;           // A_j A_j
    const SparseOp::Matrix number = a_dag * a;     // A*_j A_j
    t += (2.0 * e) * (create_p + SparseOp::Matrix(create_p.adjoint()));
    t += (e * e) * (pair + SparseOp::Matrix(pair.adjoint()) + 2.0 * number);
  }
  t.prune(Complex(0.0, 0.0));
  return SparseOp::hermitian_from_matrix(t);
}

SparseOp assemble_L(const FockBasis& basis, const ModelParams& params) {
  const FieldOps field = smeared_field_ops(basis, params);
  const DiagonalOps diag = diagonal_ops(basis, params);
  const double e = params.e;
  SparseOp::Matrix l = sparse_diagonal(diag.d_f);
  for (int j = 0; j < 3; ++j) {
    const SparseOp::Matrix& a = field.a[j].matrix();
    l += (2.0 * e * e) * SparseOp::Matrix(SparseOp::Matrix(a.adjoint()) * a);
  }
  l.prune(Complex(0.0, 0.0));
  return SparseOp::hermitian_from_matrix(l);
}

double default_kernel_tol(const Eigen::VectorXd& diag) {
  return diag.size() == 0 ? 0.0 : 1e-14 * diag.cwiseAbs().maxCoeff();
}

FockVector apply_pseudo_inverse(const Eigen::VectorXd& diag, const FockVector& v, double kernel_tol) {
  if (diag.size() != v.size()) throw ValidationError("apply_pseudo_inverse: vector size mismatch");
  if (kernel_tol < 0.0) kernel_tol = default_kernel_tol(diag);
  FockVector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(diag(i)) <= kernel_tol) {
      if (i != 0) {
        std::ostringstream msg;
        msg << "diagonal entry " << diag(i) << " of excited state " << i << " lies in the kernel (tol " << kernel_tol
            << ")";
        throw DegenerateGridError(msg.str());
      }
      out(i) = 0.0;
    } else {
      out(i) = v(i) / diag(i);
    }
  }
  return out;
}

FockOperators::FockOperators(const FockBasis& basis, const ModelParams& params)
    : basis_(&basis),
      params_(params),
      field_(smeared_field_ops(basis, params)),
      diag_(diagonal_ops(basis, params)),
      kernel_tol_(default_kernel_tol(diag_.d_f)) {}

FockVector FockOperators::vacuum() const {
  FockVector v = FockVector::Zero(static_cast<Eigen::Index>(dim()));
  v(0) = 1.0;
  return v;
}

FockVector FockOperators::resolvent(const FockVector& v) const {
  FockVector x = v;
  x(0) = 0.0;
  return apply_pseudo_inverse(diag_.d_f, x, kernel_tol_);
}

}  // namespace nelson
