#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "nelson/fock.hpp"

using namespace nelson;

namespace {

ModelParams params(double e, double lambda = 1.0, double shift = 0.0) {
  ModelParams p;
  p.e = e;
  p.lambda = lambda;
  p.ir_shift = shift;
  return p;
}

Eigen::MatrixXcd dense(const SparseOp& op) { return Eigen::MatrixXcd(op.matrix()); }

FockVector random_vector(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  FockVector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(g(rng), g(rng));
  return v;
}

}  // namespace

TEST_SUITE("fock") {

TEST_CASE("basis dimensions") {
  const ModelParams p = params(0.0);
  CHECK(FockBasis(build_mode_grid(1, 2, p), 0).dim() == 1);
  CHECK(FockBasis(build_mode_grid(1, 2, p), 2).dim() == 6);
  const FockBasis b(build_mode_grid(3, 4, p), 3);
  CHECK(b.modes() == 24);
  CHECK(b.dim() == 2925);
  CHECK(b.sector_offsets() == std::vector<std::size_t>{0, 1, 25, 325, 2925});
  CHECK(FockBasis::dimension_for(24, 3) == 2925);
}

TEST_CASE("dimension cap") {
  const ModelParams p = params(0.0);
  try {
    FockBasis b(build_mode_grid(3, 4, p), 3, 1000);
    FAIL("expected DimensionOverflowError");
  } catch (const DimensionOverflowError& e) {
    CHECK(e.requested() == 2925);
  }
}

TEST_CASE("ordering and lookup") {
  const FockBasis b(build_mode_grid(1, 2, params(0.0)), 2);
  CHECK(b.multiset(0).empty());
  CHECK(b.multiset(1) == FockBasis::Multiset{0});
  CHECK(b.multiset(2) == FockBasis::Multiset{1});
  CHECK(b.multiset(3) == FockBasis::Multiset{0, 0});
  CHECK(b.multiset(4) == FockBasis::Multiset{0, 1});
  CHECK(b.multiset(5) == FockBasis::Multiset{1, 1});
  for (std::size_t i = 0; i < b.dim(); ++i) {
    CHECK(b.index_of(b.multiset(i)) == i);
    CHECK(b.index_of(b.state(i)) == i);
  }
  CHECK(b.state(3).occupations == std::vector<std::pair<std::uint32_t, std::uint32_t>>{{0, 2}});
  CHECK(b.state(3).total() == 2);
  CHECK(b.index_of(FockBasis::Multiset{0, 0, 0}) == FockBasis::npos);
  OccupationState bad;
  bad.occupations = {{1, 1}, {0, 1}};
  CHECK_THROWS_AS(b.index_of(bad), ValidationError);
}

TEST_CASE("canonical commutation relations below the truncation") {
  const FockBasis b(build_mode_grid(1, 4, params(0.0)), 3);
  const std::size_t m = b.modes();
  const std::size_t low = b.sector_offsets()[3];  // states with N <= 2
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::MatrixXcd ai = dense(mode_annihilator(b, i));
    for (std::size_t j = 0; j < m; ++j) {
      const Eigen::MatrixXcd aj = dense(mode_annihilator(b, j));
      const Eigen::MatrixXcd c = ai * aj.adjoint() - aj.adjoint() * ai;
      const Eigen::MatrixXcd expected =
          (i == j ? 1.0 : 0.0) * Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(b.dim()), static_cast<Eigen::Index>(b.dim()));
      CHECK((c - expected).leftCols(static_cast<Eigen::Index>(low)).norm() < 1e-13);
    }
  }
}

TEST_CASE("smeared commutator is the weighted overlap") {
  const ModelParams p = params(0.0, 2.0);
  const FockBasis b(build_mode_grid(2, 3, p), 2);
  const FieldOps f = smeared_field_ops(b, p);
  const std::size_t low = b.sector_offsets()[2];
  for (int j = 0; j < 3; ++j) {
    for (int l = 0; l < 3; ++l) {
      double expected = 0.0;
      for (std::size_t i = 0; i < b.modes(); ++i) {
        const Vec3 phi = form_factor(b.grid().nodes[i], p);
        expected += b.grid().weights[i] * phi[j] * phi[l];
      }
      const Eigen::MatrixXcd aj = dense(f.a[j]), al = dense(f.a[l]);
      const Eigen::MatrixXcd c = aj * al.adjoint() - al.adjoint() * aj;
      const auto n = static_cast<Eigen::Index>(b.dim());
      CHECK((c - expected * Eigen::MatrixXcd::Identity(n, n)).leftCols(static_cast<Eigen::Index>(low)).norm() < 1e-15);
    }
  }
}

TEST_CASE("diagonal operators") {
  const ModelParams p = params(0.0, 1.0, 0.01);
  const FockBasis b(build_mode_grid(2, 4, p), 2);
  const DiagonalOps d = diagonal_ops(b, p);
  CHECK(d.h_f[0] == doctest::Approx(0.01));
  CHECK(d.d_f[0] == doctest::Approx(0.01));
  const double k0 = b.grid().magnitudes[0];
  CHECK(d.h_f[1] == doctest::Approx(k0 + 0.01).epsilon(1e-14));
  CHECK(d.d_f[1] == doctest::Approx(k0 * k0 + k0 + 0.01).epsilon(1e-14));
  for (int c = 0; c < 3; ++c) CHECK(d.p[c][1] == doctest::Approx(b.grid().nodes[0][c]).epsilon(1e-14));

  // Antipodal pair: zero total momentum.
  const auto& nodes = b.grid().nodes;
  std::size_t partner = FockBasis::npos;
  for (std::size_t j = 0; j < b.modes(); ++j) {
    if (norm(nodes[0] + nodes[j]) < 1e-12) partner = j;
  }
  REQUIRE(partner != FockBasis::npos);
  const std::size_t pair = b.index_of(FockBasis::Multiset{0, static_cast<std::uint16_t>(partner)});
  CHECK(d.d_f[static_cast<Eigen::Index>(pair)] == doctest::Approx(2.0 * k0 + 0.01).epsilon(1e-13));
  const std::size_t twice = b.index_of(FockBasis::Multiset{0, 0});
  CHECK(d.d_f[static_cast<Eigen::Index>(twice)] == doctest::Approx(4.0 * k0 * k0 + 2.0 * k0 + 0.01).epsilon(1e-13));
}

TEST_CASE("T is Hermitian and reduces to D_f at zero coupling") {
  const FockBasis b(build_mode_grid(2, 3, params(0.0)), 3);
  const SparseOp t0 = assemble_T(b, params(0.0));
  CHECK(t0.hermitian());
  CHECK(t0.is_diagonal());
  const DiagonalOps d = diagonal_ops(b, params(0.0));
  CHECK((t0.real_diagonal() - d.d_f).norm() == 0.0);

  const SparseOp t = assemble_T(b, params(0.3));
  CHECK(t.hermiticity_residual() == 0.0);
  CHECK_FALSE(t.is_diagonal());
}

TEST_CASE("odd and even parts of T under the photon parity") {
  const FockBasis b(build_mode_grid(2, 3, params(0.0)), 3);
  const Eigen::MatrixXcd plus = dense(assemble_T(b, params(0.2)));
  const Eigen::MatrixXcd at0 = dense(assemble_T(b, params(0.0)));
  const Eigen::MatrixXcd at_small = dense(assemble_T(b, params(0.1)));
  Eigen::VectorXd parity(static_cast<Eigen::Index>(b.dim()));
  for (std::size_t i = 0; i < b.dim(); ++i) parity[static_cast<Eigen::Index>(i)] = b.photon_number(i) % 2 ? -1.0 : 1.0;
  // T(e) = D + e X + e^2 Y with X odd and Y even under the parity.
  const Eigen::MatrixXcd x = (4.0 * at_small - plus - 3.0 * at0) / (0.1 * 4.0 - 0.2);
  const Eigen::MatrixXcd y = (plus - at0 - 0.2 * x) / 0.04;
  const auto par = parity.asDiagonal();
  CHECK((par * x * par + x).norm() < 1e-12 * (1.0 + x.norm()));
  CHECK((par * y * par - y).norm() < 1e-12 * (1.0 + y.norm()));
}

TEST_CASE("L annihilates the vacuum and dominates D_f") {
  const ModelParams p = params(0.4);
  const FockBasis b(build_mode_grid(2, 3, p), 3);
  const FockOperators ops(b, p);
  const SparseOp l = assemble_L(b, p);
  CHECK(l.hermitian());
  CHECK(l.apply(ops.vacuum()).norm() == 0.0);
  const Eigen::MatrixXcd gap = dense(l) - Eigen::MatrixXcd(ops.diag().d_f.cast<Complex>().asDiagonal());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gap);
  CHECK(es.eigenvalues().minCoeff() > -1e-13);
}

TEST_CASE("pseudo-inverse") {
  Eigen::VectorXd d(3);
  d << 0.0, 2.0, 4.0;
  FockVector v(3);
  v << 1.0, 1.0, Complex(0.0, 1.0);
  const FockVector r = apply_pseudo_inverse(d, v);
  CHECK(r[0] == Complex(0.0));
  CHECK(r[1] == Complex(0.5));
  CHECK(r[2] == Complex(0.0, 0.25));
  Eigen::VectorXd bad(3);
  bad << 0.0, 1e-20, 1.0;
  CHECK_THROWS_AS(apply_pseudo_inverse(bad, v), DegenerateGridError);
}

TEST_CASE("reduced resolvent drops the vacuum even with a shift") {
  const ModelParams p = params(0.0, 1.0, 0.5);
  const FockBasis b(build_mode_grid(1, 2, p), 2);
  const FockOperators ops(b, p);
  FockVector v = FockVector::Ones(static_cast<Eigen::Index>(b.dim()));
  const FockVector r = ops.resolvent(v);
  CHECK(r[0] == Complex(0.0));
  for (Eigen::Index i = 1; i < r.size(); ++i) CHECK(std::abs(r[i] * ops.diag().d_f[i] - 1.0) < 1e-15);
}

TEST_CASE("A*.A is bounded by (sum w |phi|^2 / k) H_f") {
  const ModelParams p = params(0.0, 3.0);
  const FockBasis b(build_mode_grid(2, 3, p), 3);
  const FieldOps f = smeared_field_ops(b, p);
  const DiagonalOps d = diagonal_ops(b, p);
  double c = 0.0;
  for (std::size_t i = 0; i < b.modes(); ++i) {
    c += b.grid().weights[i] * form_factor_sq(b.grid().magnitudes[i], p.lambda) / b.grid().magnitudes[i];
  }
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const FockVector v = random_vector(b.dim(), seed);
    double lhs = 0.0;
    for (int j = 0; j < 3; ++j) lhs += f.a[j].apply(v).squaredNorm();
    const double rhs = c * (v.conjugate().cwiseProduct(d.h_f.cast<Complex>().cwiseProduct(v))).sum().real();
    CHECK(lhs <= rhs * (1.0 + 1e-12));
  }
}

TEST_CASE("sparse operator text round trip") {
  const ModelParams p = params(0.25);
  const FockBasis b(build_mode_grid(2, 3, p), 2);
  for (const SparseOp& op : {assemble_T(b, p), smeared_field_ops(b, p).a[1]}) {
    std::stringstream s;
    op.write_text(s);
    const SparseOp back = SparseOp::read_text(s);
    CHECK(back.hermitian() == op.hermitian());
    CHECK(back.dim() == op.dim());
    CHECK((dense(back) - dense(op)).norm() == 0.0);
  }
}

TEST_CASE("hermitian construction rejects the lower triangle") {
  std::vector<SparseOp::Triplet> lower{{1, 0, 1.0}};
  CHECK_THROWS_AS(SparseOp::hermitian_from_upper(2, lower), ValidationError);
  std::vector<SparseOp::Triplet> upper{{0, 1, Complex(1.0, 2.0)}, {0, 0, 3.0}, {0, 0, 1.0}};
  const SparseOp h = SparseOp::hermitian_from_upper(2, upper);
  const Eigen::MatrixXcd m = dense(h);
  CHECK(m(0, 0) == Complex(4.0));
  CHECK(m(1, 0) == Complex(1.0, -2.0));
  CHECK(h.hermiticity_residual() == 0.0);
}

}  // TEST_SUITE
