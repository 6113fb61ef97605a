#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "nelson/fock.hpp"
#include "nelson/quad.hpp"
#include "nelson/wick.hpp"

using namespace nelson;
using namespace nelson::wick;

namespace {

ModelParams cutoff(double lambda, double shift = 0.0) {
  ModelParams p;
  p.lambda = lambda;
  p.ir_shift = shift;
  return p;
}

// Counts annihilator/creator matchings with every resolvent crossed by a line.
int brute_force_matchings(const OpString& s) {
  std::vector<int> ann, cre, res;
  for (int i = 0; i < static_cast<int>(s.size()); ++i) {
    switch (s.tokens()[i].kind) {
      case OpKind::Annihilate: ann.push_back(i); break;
      case OpKind::Create: cre.push_back(i); break;
      case OpKind::Resolvent: res.push_back(i); break;
      default: break;
    }
  }
  std::vector<int> perm(cre.size());
  std::iota(perm.begin(), perm.end(), 0);
  int count = 0;
  do {
    bool ok = true;
    for (std::size_t i = 0; i < ann.size() && ok; ++i) ok = ann[i] < cre[perm[i]];
    for (int r : res) {
      if (!ok) break;
      bool crossed = false;
      for (std::size_t i = 0; i < ann.size(); ++i) crossed |= ann[i] < r && r < cre[perm[i]];
      ok = crossed;
    }
    count += ok;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return count;
}

struct Kin {
  std::vector<Vec3> k;
  std::vector<double> phi;
  double eps;

  double pp(int a, int b) const { return phi[a] * phi[b] * dot(k[a], k[b]) / (norm(k[a]) * norm(k[b])); }
  double pk(int a, const Vec3& q) const { return phi[a] * dot(k[a], q) / norm(k[a]); }
  double d(std::initializer_list<int> lines) const {
    Vec3 p{0, 0, 0};
    double h = 0;
    for (int l : lines) p = p + k[l], h += norm(k[l]);
    return dot(p, p) + h + eps;
  }
};

double oracle_a4(const Kin& x) { return 2.0 * std::pow(x.pp(0, 1), 2) / x.d({0, 1}); }

double oracle_b1(const Kin& x) {
  const Vec3 k12 = x.k[0] + x.k[1], k23 = x.k[1] + x.k[2];
  const double d12 = x.d({0, 1}), d23 = x.d({1, 2}), d123 = x.d({0, 1, 2});
  return 2.0 * std::pow(x.pp(0, 1), 2) * std::pow(x.pk(2, k12), 2) / (d12 * d123 * d12) +
         4.0 * x.pp(0, 1) * x.pk(2, k12) * x.pk(0, k23) * x.pp(1, 2) / (d12 * d123 * d23);
}

double oracle_b2(const Kin& x) {
  return 4.0 * x.pp(0, 1) * x.pk(0, x.k[1]) * x.pk(2, x.k[1]) * x.pp(1, 2) / (x.d({0, 1}) * x.d({1}) * x.d({1, 2}));
}

double oracle_b3(const Kin& x) {
  return 4.0 * x.pp(0, 1) * x.pp(0, 2) * x.pp(1, 2) / (x.d({0, 1}) * x.d({1, 2}));
}

// Average over relabellings of the photon lines.
double symmetrized(int n, const std::vector<Vec3>& k, const std::function<double(const std::vector<Vec3>&)>& f) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double sum = 0;
  int count = 0;
  do {
    std::vector<Vec3> q(n);
    for (int i = 0; i < n; ++i) q[i] = k[perm[i]];
    sum += f(q);
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return sum / count;
}

std::vector<Vec3> random_momenta(std::mt19937_64& rng, int n, double radius) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<Vec3> k;
  for (int i = 0; i < n; ++i) {
    Vec3 v{g(rng), g(rng), g(rng)};
    k.push_back((radius * u(rng) / norm(v)) * v);
  }
  return k;
}

Vec3 rotate(const Vec3& v, double a, double b) {
  const Vec3 r1{std::cos(a) * v[0] - std::sin(a) * v[1], std::sin(a) * v[0] + std::cos(a) * v[1], v[2]};
  return {r1[0], std::cos(b) * r1[1] - std::sin(b) * r1[2], std::sin(b) * r1[1] + std::cos(b) * r1[2]};
}

}  // namespace

TEST_SUITE("wick") {

TEST_CASE("parse and print round trip") {
  for (const auto& [name, s] : builtin_vevs()) {
    CHECK(OpString::parse(s.to_string()) == s);
  }
  const OpString s = OpString::parse("AA R PA R A*P R A*A*");
  CHECK(s.size() == 11);
  CHECK(s.count(OpKind::Resolvent) == 3);
  CHECK(s.count(OpKind::Momentum) == 2);
  CHECK(s.balanced());
  CHECK(s.tokens()[0].partner == 1);
  CHECK(s.tokens()[3].partner == 4);
  CHECK(OpString::parse("AAR A*A*") == OpString::parse("AA R A*A*"));
}

TEST_CASE("adjoint reverses and swaps ladder operators") {
  const OpString s = OpString::parse("AA R PA R A*P R A*A*");
  CHECK(s.adjoint() == s);
  CHECK(OpString::parse("AA R A*A R A*A*").adjoint() == OpString::parse("AA R A*A R A*A*"));
  CHECK(OpString::parse("PA R A*A*").adjoint() == OpString::parse("AA R A*P"));
  CHECK(s.adjoint().adjoint() == s);
}

TEST_CASE("malformed strings are rejected") {
  CHECK_THROWS_AS(OpString::parse(""), ValidationError);
  CHECK_THROWS_AS(OpString::parse("AX"), ValidationError);
  CHECK_THROWS_AS(OpString::parse("A R A*A*"), ValidationError);
  CHECK_THROWS_AS(OpString::parse("PP"), ValidationError);
  CHECK_THROWS_AS(OpString::parse("AA A*A*R").validate_vev(), ValidationError);
  CHECK_THROWS_AS(OpString::parse("R AA A*A*").validate_vev(), ValidationError);
  CHECK_THROWS_AS(OpString::parse("AA R AA").validate_vev(), ValidationError);
  CHECK_NOTHROW(OpString::parse("AA R A*A*").validate_vev());
}

TEST_CASE("class multiplicities add up to the brute-force matching count") {
  for (const char* text : {"AA R A*A*", "AA R PA R A*P R A*A*", "AA R A*P R PA R A*A*", "AA R A*A R A*A*",
                           "AA R PA* R AP R A*A*", "AA A*A*", "AA R AA R A*A* R A*A*"}) {
    const OpString s = OpString::parse(text);
    int total = 0;
    for (const auto& d : expand_vev(s)) total += d.multiplicity;
    CHECK_MESSAGE(total == brute_force_matchings(s), text);
  }
}

TEST_CASE("builtin class structure") {
  const auto v = builtin_vevs();
  const auto a4 = expand_vev(v.at("a4"));
  REQUIRE(a4.size() == 1);
  CHECK(a4[0].multiplicity == 2);
  const auto b1 = expand_vev(v.at("b1"));
  REQUIRE(b1.size() == 2);
  std::vector<int> mult{b1[0].multiplicity, b1[1].multiplicity};
  std::sort(mult.begin(), mult.end());
  CHECK(mult == std::vector<int>{2, 4});
  for (const auto& d : b1) {
    if (d.multiplicity == 4) CHECK(d.denominators == std::vector<std::vector<int>>{{0, 1}, {0, 1, 2}, {1, 2}});
  }
  CHECK(expand_vev(v.at("b2")).size() == 1);
  CHECK(expand_vev(v.at("b2"))[0].multiplicity == 4);
  CHECK(expand_vev(v.at("b3")).size() == 1);
  CHECK(expand_vev(v.at("b3"))[0].multiplicity == 4);
}

TEST_CASE("integrands match hand-written formulas") {
  std::mt19937_64 rng(2024);
  const ModelParams p = cutoff(4.0, 0.03);
  const std::map<std::string, std::function<double(const Kin&)>> oracles{
      {"a4", oracle_a4}, {"b1", oracle_b1}, {"b2", oracle_b2}, {"b3", oracle_b3}};
  for (const auto& [name, oracle] : oracles) {
    const IntegrandExpr expr = vev_integrand(builtin_vevs().at(name), p);
    for (int trial = 0; trial < 20; ++trial) {
      const auto k = random_momenta(rng, expr.n_vars, 3.9);
      const double engine =
          symmetrized(expr.n_vars, k, [&](const std::vector<Vec3>& q) { return expr.evaluate(q, p); });
      const double hand = symmetrized(expr.n_vars, k, [&](const std::vector<Vec3>& q) {
        Kin x{q, {}, p.ir_shift};
        for (const auto& v : q) x.phi.push_back(form_factor_magnitude(norm(v), p.lambda));
        return oracle(x);
      });
      CHECK_MESSAGE(std::abs(engine - hand) <= 1e-12 * std::abs(hand) + 1e-300, name);
    }
  }
}

TEST_CASE("integrands are rotation invariant and vanish outside the cutoff") {
  std::mt19937_64 rng(5);
  const ModelParams p = cutoff(2.0);
  for (const auto& [name, s] : builtin_vevs()) {
    const IntegrandExpr expr = vev_integrand(s, p);
    const auto k = random_momenta(rng, expr.n_vars, 1.9);
    std::vector<Vec3> r;
    for (const auto& v : k) r.push_back(rotate(v, 0.7, -1.3));
    const double a = expr.evaluate(k, p), b = expr.evaluate(r, p);
    CHECK(std::abs(a - b) <= 1e-13 * std::abs(a));
    auto out = k;
    out[0] = (2.5 / norm(out[0])) * out[0];
    CHECK(expr.evaluate(out, p) == 0.0);
    std::vector<Vec3> wrong(k.begin(), k.end() - 1);
    CHECK_THROWS_AS(expr.evaluate(wrong, p), ValidationError);
  }
}

TEST_CASE("AA* gives the phi norm") {
  const ModelParams p = cutoff(1.0);
  const IntegrandExpr expr = vev_integrand(OpString::parse("AA*"), p);
  CHECK(expr.n_vars == 1);
  const quad::QuadResult mc = quad::integrate_mc(expr, 100000, 1, p);
  // The importance density is proportional to the integrand: zero variance.
  CHECK(mc.value == doctest::Approx(phi_norm_sq_closed_form(1.0)).epsilon(1e-10));

  const FockBasis b(build_mode_grid(12, 4, p), 1);
  const FockOperators ops(b, p);
  CHECK(matrix_vev(OpString::parse("AA*"), ops) == doctest::Approx(phi_norm_sq_closed_form(1.0)).epsilon(1e-6));
}

TEST_CASE("block and vector application agree") {
  const ModelParams p = cutoff(1.0, 0.01);
  const FockBasis b(build_mode_grid(2, 3, p), 3);
  const FockOperators ops(b, p);
  const OpString s = OpString::parse("PA R A*A R A*P");
  SparseBlock cols(static_cast<std::int64_t>(b.dim()), 3);
  cols.insert(1, 0) = Complex(1.0, 0.5);
  cols.insert(4, 1) = 2.0;
  cols.insert(10, 2) = Complex(0.0, -1.0);
  const SparseBlock out = apply_string(s, ops, cols);
  for (int c = 0; c < 3; ++c) {
    const Eigen::VectorXcd v = Eigen::VectorXcd(cols.col(c));
    const Eigen::VectorXcd expected = apply_string(s, ops, v);
    CHECK((Eigen::VectorXcd(out.col(c)) - expected).norm() <= 1e-14 * (1.0 + expected.norm()));
  }
}

TEST_CASE("matrix path approaches the continuum a4 under refinement") {
  const ModelParams p = cutoff(1.0);
  const double golden = 1.0537689299466e-05;
  double previous = kInf;
  for (auto [nr, na] : {std::pair<std::size_t, std::size_t>{2, 3}, {3, 4}, {4, 6}}) {
    const FockBasis b(build_mode_grid(nr, na, p), 2);
    const FockOperators ops(b, p);
    const double gap = std::abs(matrix_vev(builtin_vevs().at("a4"), ops) - golden);
    CHECK(gap < previous);
    previous = gap;
  }
  CHECK(previous < 1e-3 * golden);
}

TEST_CASE("matrix vev needs enough photon sectors") {
  const ModelParams p = cutoff(1.0);
  const FockBasis b(build_mode_grid(2, 3, p), 2);
  const FockOperators ops(b, p);
  CHECK_THROWS_AS(matrix_vev(builtin_vevs().at("b1"), ops), ValidationError);
}

}  // TEST_SUITE
