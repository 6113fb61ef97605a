#include "nelson/lemma_lab.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nelson/parallel.hpp"

namespace nelson {

bool FormBoundReport::passed(double tol) const {
  if (unbounded || !std::isfinite(c_star) || !(margin >= -tol)) return false;
  if (gram_violations > 0) return false;
  if (reference_bound && !(c_star <= *reference_bound + tol)) return false;
  return true;
}

namespace {

double operator_scale(const LinearOperator& m, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> normal;
  FockVector x(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
  x.normalize();
  double scale = 0.0;
  for (int it = 0; it < 6; ++it) {
    FockVector y = m(x);
    const double ny = y.norm();
    scale = std::max(scale, ny);
    if (ny == 0.0) break;
    x = y / ny;
  }
  return scale;
}

FockVector unit(std::size_t dim, std::size_t i) {
  FockVector v = FockVector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(i)) = 1.0;
  return v;
}

}  // namespace

FormBoundReport minimal_form_constant(const LinearOperator& m, const Eigen::VectorXd& n_diag, double alpha,
                                      const FormBoundOptions& options) {
  const auto dim = static_cast<std::size_t>(n_diag.size());
  if (dim == 0) throw ValidationError("minimal_form_constant: empty basis");
  FormBoundReport report;
  report.lemma_id = options.lemma_id;
  report.alpha = alpha;
  report.grid_level = options.grid_level;
  report.lambda = options.lambda;

  const double n_top = n_diag.cwiseAbs().maxCoeff();
  if (n_diag.minCoeff() < -1e-12 * std::max(1.0, n_top)) {
    throw ValidationError("minimal_form_constant: N is indefinite (min diagonal " +
                          std::to_string(n_diag.minCoeff()) + ")");
  }
  const double kernel_tol = 1e-14 * n_top;
  std::vector<std::size_t> kernel, positive;
  for (std::size_t i = 0; i < dim; ++i) (n_diag(static_cast<Eigen::Index>(i)) <= kernel_tol ? kernel : positive).push_back(i);

  const double scale = std::max(operator_scale(m, dim, options.seed), std::abs(alpha));
  const double zero_tol = 1e-10 * std::max(scale, std::numeric_limits<double>::min());

  // Kernel columns of M - alpha.
  const auto nk = static_cast<Eigen::Index>(kernel.size());
  Eigen::MatrixXcd m_kk(nk, nk);
  std::vector<FockVector> kernel_cols;
  for (Eigen::Index b = 0; b < nk; ++b) {
    FockVector col = m(unit(dim, kernel[static_cast<std::size_t>(b)]));
    col(static_cast<Eigen::Index>(kernel[static_cast<std::size_t>(b)])) -= alpha;
    for (Eigen::Index a = 0; a < nk; ++a) m_kk(a, b) = col(static_cast<Eigen::Index>(kernel[static_cast<std::size_t>(a)]));
    kernel_cols.push_back(std::move(col));
  }

  // Schur complement terms from negative kernel directions.
  std::vector<FockVector> schur_vectors;  // (M - alpha)_{PK} u / sqrt(-mu), on the full index set
  if (nk > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m_kk + m_kk.adjoint()));
    for (Eigen::Index q = 0; q < nk; ++q) {
      const double mu = es.eigenvalues()(q);
      FockVector coupling = FockVector::Zero(static_cast<Eigen::Index>(dim));
      for (Eigen::Index b = 0; b < nk; ++b) coupling += es.eigenvectors()(b, q) * kernel_cols[static_cast<std::size_t>(b)];
      for (std::size_t k : kernel) coupling(static_cast<Eigen::Index>(k)) = 0.0;
      if (mu > zero_tol || (std::abs(mu) <= zero_tol && coupling.norm() > zero_tol)) {
        report.unbounded = true;
        report.c_star = kInf;
        report.margin = std::numeric_limits<double>::quiet_NaN();
        return report;
      }
      if (mu < -zero_tol) schur_vectors.push_back(coupling / std::sqrt(-mu));
    }
  }

  if (positive.empty()) {
    report.c_star = 0.0;
  } else {
    Eigen::VectorXd inv_sqrt(static_cast<Eigen::Index>(positive.size()));
    for (std::size_t p = 0; p < positive.size(); ++p) {
      inv_sqrt(static_cast<Eigen::Index>(p)) = 1.0 / std::sqrt(n_diag(static_cast<Eigen::Index>(positive[p])));
    }
    auto g = [&](const FockVector& x) -> FockVector {
      FockVector full = FockVector::Zero(static_cast<Eigen::Index>(dim));
      for (std::size_t p = 0; p < positive.size(); ++p) {
        full(static_cast<Eigen::Index>(positive[p])) = inv_sqrt(static_cast<Eigen::Index>(p)) * x(static_cast<Eigen::Index>(p));
      }
      FockVector y = m(full) - alpha * full;
      for (const auto& s : schur_vectors) y += s * s.dot(full);
      FockVector out(x.size());
      for (std::size_t p = 0; p < positive.size(); ++p) {
        out(static_cast<Eigen::Index>(p)) = inv_sqrt(static_cast<Eigen::Index>(p)) * y(static_cast<Eigen::Index>(positive[p]));
      }
      return out;
    };
    report.c_star =
        lanczos_largest(g, positive.size(), {options.lanczos_tol, options.max_iter, options.seed}).value;
  }

  const double c = report.c_star;
  auto slack = [&](const FockVector& x) -> FockVector {
    return alpha * x + c * n_diag.cwiseProduct(x) - m(x);
  };
  report.margin = lanczos_smallest(slack, dim, {options.lanczos_tol, options.max_iter, options.seed + 1}).value;
  return report;
}

FormBoundReport minimal_form_constant(const SparseOp& m, const SparseOp& n, double alpha,
                                      const FormBoundOptions& options) {
  if (m.dim() != n.dim()) throw ValidationError("minimal_form_constant: dimension mismatch");
  if (!m.hermitian() || !n.hermitian()) throw ValidationError("minimal_form_constant needs Hermitian M and N");
  if (!n.is_diagonal()) throw ValidationError("minimal_form_constant supports diagonal N only");
  return minimal_form_constant([&m](const FockVector& x) { return m.apply(x); }, n.real_diagonal(), alpha, options);
}

// ---------------------------------------------------------------------------

std::size_t CompressedString::extension_depth(const wick::OpString& s) {
  int photons = 0, peak = 0;
  const auto& tokens = s.tokens();
  for (auto it = tokens.rbegin(); it != tokens.rend(); ++it) {
    if (it->kind == wick::OpKind::Create) peak = std::max(peak, ++photons);
    if (it->kind == wick::OpKind::Annihilate) --photons;
  }
  return static_cast<std::size_t>(std::max(0, peak - std::max(photons, 0)));
}

CompressedString::CompressedString(const FockBasis& basis, const ModelParams& params, const wick::OpString& s)
    : string_(s) {
  owned_basis_ = std::make_shared<FockBasis>(basis.grid(), basis.n_max() + extension_depth(s));
  ops_ = std::make_shared<FockOperators>(*owned_basis_, params);
  build(basis);
}

CompressedString::CompressedString(const FockBasis& basis, std::shared_ptr<const FockOperators> extended,
                                   const wick::OpString& s)
    : string_(s), ops_(std::move(extended)) {
  if (!(ops_->basis().grid() == basis.grid())) throw ValidationError("CompressedString: grids differ");
  if (ops_->basis().n_max() < basis.n_max() + extension_depth(s)) {
    throw ValidationError("CompressedString: extended basis too small for \"" + s.to_string() + "\"");
  }
  build(basis);
}

namespace {

std::vector<std::string> resolvent_groups(const wick::OpString& s) {
  std::vector<std::string> groups;
  const std::string text = s.to_string();
  const std::string sep = " R ";
  std::size_t start = 0;
  for (std::size_t at = text.find(sep); at != std::string::npos; at = text.find(sep, start)) {
    groups.push_back(text.substr(start, at - start));
    start = at + sep.size();
  }
  groups.push_back(text.substr(start));
  return groups;
}

std::string join_groups(const std::vector<std::string>& g, std::size_t first, std::size_t last) {
  std::string out;
  for (std::size_t i = first; i < last; ++i) out += (i > first ? " R " : "") + g[i];
  return out;
}

std::optional<wick::OpString> try_parse(const std::string& text) {
  try {
    return wick::OpString::parse(text);
  } catch (const ValidationError&) {
    return std::nullopt;
  }
}

}  // namespace

// Symmetric strings T^+ R T and T^+ R (A*.A) R T are assembled as Gram
// products, which keeps the intermediate blocks to one half of the string.
void CompressedString::build(const FockBasis& basis) {
  const auto n = static_cast<Eigen::Index>(basis.dim());
  wick::SparseBlock columns(static_cast<Eigen::Index>(ops_->dim()), n);
  columns.reserve(Eigen::VectorXi::Ones(n));
  for (Eigen::Index i = 0; i < n; ++i) columns.insert(i, i) = 1.0;
  columns.makeCompressed();

  const auto groups = resolvent_groups(string_);
  const std::size_t g = groups.size();
  wick::SparseBlock result;
  bool done = false;
  if (g >= 2 && g % 2 == 0) {
    const auto left = try_parse(join_groups(groups, 0, g / 2));
    const auto right = try_parse(join_groups(groups, g / 2, g));
    if (left && right && *left == right->adjoint()) {
      const wick::SparseBlock y = wick::apply_string(*right, *ops_, columns);
      const wick::SparseBlock ry = wick::apply_string(wick::OpString::parse("R"), *ops_, y);
      result = wick::SparseBlock(y.adjoint()) * ry;
      done = true;
    }
  } else if (g >= 3 && groups[g / 2] == "A*A") {
    const auto left = try_parse(join_groups(groups, 0, g / 2) + " R");
    const auto right = try_parse("R " + join_groups(groups, g / 2 + 1, g));
    if (left && right && *left == right->adjoint()) {
      const wick::SparseBlock y = wick::apply_string(*right, *ops_, columns);
      result = wick::SparseBlock(n, n);
      for (int c = 0; c < 3; ++c) {
        const wick::SparseBlock ay = ops_->field().a[c].matrix() * y;
        result += wick::SparseBlock(ay.adjoint()) * ay;
      }
      done = true;
    }
  }
  if (done) {
    result = 0.5 * (result + wick::SparseBlock(result.adjoint()));
  } else {
    result = wick::apply_string(string_, *ops_, columns).topRows(n);
  }
  result.prune(Complex(0.0));
  matrix_ = result;
  matrix_.makeCompressed();
}

FockVector CompressedString::apply(const FockVector& v) const {
  if (v.size() != matrix_.cols()) throw ValidationError("CompressedString: vector size mismatch");
  return matrix_ * v;
}

FockVector CompressedString::apply_adjoint(const FockVector& v) const {
  if (v.size() != matrix_.rows()) throw ValidationError("CompressedString: vector size mismatch");
  return matrix_.adjoint() * v;
}

double CompressedString::vacuum_value() const { return wick::matrix_vev(string_, *ops_); }

// ---------------------------------------------------------------------------

namespace {

struct LemmaSpec {
  std::string id;
  std::string ops;
  enum class Norm { Df, Identity, OnePlusHf, GramHf } norm;
  bool lower_bound = false;  // ">=" direction, checked with signs flipped
  bool vacuum_alpha = true;
};

const std::vector<LemmaSpec>& lemma_specs() {
  static const std::vector<LemmaSpec> specs = {
      {"she1", "AA R A*A*", LemmaSpec::Norm::Df},
      {"she2", "AA R PA R A*P R A*A*", LemmaSpec::Norm::Df},
      {"she2b", "AA R PA* R AP R A*A*", LemmaSpec::Norm::Df},
      {"she3", "AA R A*A R A*A*", LemmaSpec::Norm::Df, true},
      {"she4i", "AA R PA R PA R A*A*", LemmaSpec::Norm::GramHf, false, false},
      {"she4ii", "AA R PA R A*A*", LemmaSpec::Norm::GramHf, false, false},
      {"hlt1i", "A R A*", LemmaSpec::Norm::Identity, false, false},
      {"hlt1ii", "AA R A*A*", LemmaSpec::Norm::OnePlusHf, false, false},
  };
  return specs;
}

// |<psi, M psi>|^2 <= c^2 <psi, psi> <psi, H psi> with c = ||M H^{-1/2}||.
FormBoundReport gram_check(const LemmaSpec& spec, const FockBasis& basis, const ModelParams& params,
                           const std::shared_ptr<const FockOperators>& extended, const DiagonalOps& diag,
                           const LemmaSuiteOptions& options) {
  const wick::OpString s = wick::OpString::parse(spec.ops);
  const CompressedString m(basis, extended, s);
  const std::size_t dim = basis.dim();
  const Eigen::VectorXd& h = diag.h_f;

  FormBoundReport report;
  report.lemma_id = spec.id;
  report.grid_level = options.grid_level;
  report.lambda = params.lambda;

  const double kernel_tol = 1e-14 * h.cwiseAbs().maxCoeff();
  std::vector<std::size_t> positive;
  for (std::size_t i = 0; i < dim; ++i) {
    if (h(static_cast<Eigen::Index>(i)) > kernel_tol) {
      positive.push_back(i);
    } else if (m.apply(unit(dim, i)).norm() > 0.0) {
      report.unbounded = true;
      report.c_star = kInf;
      report.margin = std::numeric_limits<double>::quiet_NaN();
      return report;
    }
  }
  auto lift = [&](const FockVector& x) {
    FockVector full = FockVector::Zero(static_cast<Eigen::Index>(dim));
    for (std::size_t p = 0; p < positive.size(); ++p) {
      full(static_cast<Eigen::Index>(positive[p])) =
          x(static_cast<Eigen::Index>(p)) / std::sqrt(h(static_cast<Eigen::Index>(positive[p])));
    }
    return full;
  };
  auto gram = [&](const FockVector& x) -> FockVector {
    const FockVector y = m.apply_adjoint(m.apply(lift(x)));
    FockVector out(x.size());
    for (std::size_t p = 0; p < positive.size(); ++p) {
      out(static_cast<Eigen::Index>(p)) = y(static_cast<Eigen::Index>(positive[p])) /
                                          std::sqrt(h(static_cast<Eigen::Index>(positive[p])));
    }
    return out;
  };
  const LanczosResult top = lanczos_largest(gram, positive.size(), {options.lanczos_tol, 3000, options.seed});
  report.c_star = std::sqrt(std::max(0.0, top.value));

  std::vector<FockVector> probes;
  const FockVector psi1 = lift(top.vector);
  const FockVector psi2 = m.apply(psi1);
  probes.push_back(psi1);
  if (psi2.norm() > 0.0) {
    probes.push_back(psi2);
    probes.push_back(psi1 / psi1.norm() + psi2 / psi2.norm());
  }
  std::mt19937_64 rng(splitmix64(options.seed ^ 0x6a09e667f3bcc908ULL));
  std::normal_distribution<double> normal;
  const auto& offsets = basis.sector_offsets();
  for (std::size_t d = 0; d < options.gram_draws; ++d) {
    FockVector psi(static_cast<Eigen::Index>(dim));
    for (std::size_t sector = 0; sector + 1 < offsets.size(); ++sector) {
      const double weight = std::exp(2.0 * normal(rng));
      for (std::size_t i = offsets[sector]; i < offsets[sector + 1]; ++i) {
        psi(static_cast<Eigen::Index>(i)) = weight * Complex(normal(rng), normal(rng));
      }
    }
    probes.push_back(std::move(psi));
  }

  double margin = kInf;
  for (const auto& psi : probes) {
    const double nn = psi.squaredNorm();
    const double hh = psi.dot(h.cwiseProduct(psi)).real();
    const double lhs = std::abs(psi.dot(m.apply(psi)));
    const double rhs = report.c_star * std::sqrt(nn * std::max(hh, 0.0));
    if (lhs * lhs > report.c_star * report.c_star * nn * hh * (1.0 + 1e-10) + 1e-300) ++report.gram_violations;
    margin = std::min(margin, (rhs - lhs) / nn);
  }
  report.gram_draws = probes.size();
  report.margin = margin;
  return report;
}

}  // namespace

std::vector<FormBoundReport> lemma_suite(const FockBasis& basis, const ModelParams& params,
                                         const LemmaSuiteOptions& options) {
  if (basis.n_max() < 3) throw ValidationError("lemma_suite needs N_max >= 3");
  for (const auto& id : options.only) {
    const auto& specs = lemma_specs();
    if (std::none_of(specs.begin(), specs.end(), [&](const LemmaSpec& s) { return s.id == id; })) {
      throw ValidationError("unknown lemma id \"" + id + "\"");
    }
  }
  const DiagonalOps diag = diagonal_ops(basis, params);
  std::vector<const LemmaSpec*> selected;
  std::size_t depth = 0;
  for (const auto& spec : lemma_specs()) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), spec.id) == options.only.end()) {
      continue;
    }
    selected.push_back(&spec);
    depth = std::max(depth, CompressedString::extension_depth(wick::OpString::parse(spec.ops)));
  }
  // One extended basis serves every string.
  const auto extended_basis = std::make_shared<FockBasis>(basis.grid(), basis.n_max() + depth);
  const std::shared_ptr<const FockOperators> extended = std::make_shared<FockOperators>(*extended_basis, params);
  std::vector<FormBoundReport> out;
  for (const LemmaSpec* sp : selected) {
    const LemmaSpec& spec = *sp;
    if (spec.norm == LemmaSpec::Norm::GramHf) {
      out.push_back(gram_check(spec, basis, params, extended, diag, options));
      continue;
    }
    const CompressedString m(basis, extended, wick::OpString::parse(spec.ops));
    const double vev = spec.vacuum_alpha ? m.vacuum_value() : 0.0;
    Eigen::VectorXd n_diag;
    switch (spec.norm) {
      case LemmaSpec::Norm::Df: n_diag = diag.d_f; break;
      case LemmaSpec::Norm::Identity: n_diag = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(basis.dim())); break;
      default: n_diag = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(basis.dim())) + diag.h_f; break;
    }
    const double sign = spec.lower_bound ? -1.0 : 1.0;
    FormBoundOptions fo;
    fo.lemma_id = spec.id;
    fo.grid_level = options.grid_level;
    fo.lambda = params.lambda;
    fo.seed = options.seed;
    fo.lanczos_tol = options.lanczos_tol;
    FormBoundReport r = minimal_form_constant(
        [&m, sign](const FockVector& x) -> FockVector { return sign * m.apply(x); }, n_diag, sign * vev, fo);
    r.alpha = vev;
    if (spec.id == "hlt1i") {
      const ModeGrid& grid = basis.grid();
      double c_a = 0.0;
      for (std::size_t q = 0; q < grid.size(); ++q) {
        c_a += grid.weights[q] * form_factor_sq(grid.magnitudes[q], params.lambda) / grid.magnitudes[q];
      }
      r.reference_bound = c_a;
    }
    out.push_back(std::move(r));
  }
  return out;
}

double verify_resolvent_identity(const FockBasis& basis, const ModelParams& params, double delta) {
  const std::size_t dim = basis.dim();
  if (dim < 2) throw ValidationError("resolvent identity needs at least one excited state");
  if (dim - 1 > 4000) throw DimensionOverflowError("resolvent identity: dense dimension above 4000", dim - 1);
  const FieldOps field = smeared_field_ops(basis, params);
  const DiagonalOps diag = diagonal_ops(basis, params);
  const auto n = static_cast<Eigen::Index>(dim - 1);

  Eigen::MatrixXd number = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (int j = 0; j < 3; ++j) {
    const Eigen::MatrixXd a = Eigen::MatrixXcd(field.a[j].matrix()).real();
    number += a.transpose() * a;
  }
  const Eigen::MatrixXd nc = number.bottomRightCorner(n, n);
  const Eigen::VectorXd d = diag.d_f.tail(n);
  const double tol = default_kernel_tol(diag.d_f);
  if ((d.array() <= tol).any()) throw DegenerateGridError("D_f vanishes on an excited state");
  const Eigen::VectorXd d_inv = d.cwiseInverse();

  const double e2 = params.e * params.e;
  Eigen::MatrixXd l = nc * (2.0 * e2);
  l.diagonal() += d;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(l);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
    throw DegenerateGridError("L is singular on the vacuum complement");
  }
  const Eigen::MatrixXd l_inv = ldlt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd dnd = d_inv.asDiagonal() * nc * d_inv.asDiagonal();
  Eigen::MatrixXd rhs = -2.0 * e2 * (1.0 + delta) * dnd;
  rhs += 4.0 * e2 * e2 * (d_inv.asDiagonal() * nc) * l_inv * (nc * d_inv.asDiagonal());
  rhs.diagonal() += d_inv;
  return (l_inv - rhs).cwiseAbs().maxCoeff();
}

CEpsBound bound_c_eps(double e, double lambda) {
  if (!(e > 0.0 && e < 1.0)) throw ValidationError("bound_c_eps needs 0 < e < 1");
  ModelParams p;
  p.lambda = lambda;
  p.e = e;
  const ConstantsReport at_e = coupling_constants(p);
  CEpsBound out;
  out.value = at_e.c_eps.value;
  out.error = at_e.c_eps.error.value_or(0.0);
  out.c_II = at_e.c_II.value;
  std::vector<double> x, y;
  for (double ef : {1e-1, 1e-2, 1e-3}) {
    p.e = ef;
    x.push_back(std::log(1.0 / ef));
    y.push_back(coupling_constants(p).c_eps.value);
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  out.prefactor = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  out.intercept = (sy - out.prefactor * sx) / n;
  return out;
}

}  // namespace nelson
