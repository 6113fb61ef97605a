// Acceptance run: one PASS/FAIL line per criterion.
//
//   nelson_acceptance [--expect-fail N]...
//
// Exit status is 0 when every criterion passes except those listed with
// --expect-fail, which must fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nelson/cli.hpp"
#include "nelson/lemma_lab.hpp"
#include "nelson/spectral.hpp"

using namespace nelson;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    detail += (detail.empty() ? "failed: " : "; ") + what;
  }
};

double linear_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / x.size(), my += y[i] / y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

ModelParams params(double e, double lambda, double z = 1.0) {
  ModelParams p;
  p.e = e;
  p.lambda = lambda;
  p.z = z;
  return p;
}

Outcome binding_coefficient() {
  Outcome o;
  const EnergyReport inf = binding_expansion(params(0.1, kInf));
  const double target = 1.0 / (6.0 * kPi * kPi);
  const double quad_rel = std::abs(inf.residuals.at("I_quad") - inf.residuals.at("I_closed")) / target;
  o.require(std::abs(inf.residuals.at("I_closed") - target) <= 1e-15 * target, "closed form at infinity");
  o.require(quad_rel <= 1e-8, fmt("quadrature vs closed form %.2e", quad_rel));
  o.require(std::abs(target - 0.016886863) < 1e-9, fmt("coefficient %.10f", target));
  for (double lambda : {1.0, 10.0, 100.0, 1e4}) {
    const double closed = (1.0 - std::pow(1.0 + lambda, -2.0)) / (6.0 * kPi * kPi);
    const double q = binding_integral_quad(lambda).value;
    o.require(std::abs(q - closed) <= 1e-10 * closed, fmt("lambda=%g rel %.2e", lambda, std::abs(q - closed) / closed));
  }
  o.detail = fmt("I(inf)=%.12f quad rel %.1e", target, quad_rel) + (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome coupling_constants_check() {
  Outcome o;
  double worst = 0.0;
  for (double lambda : {0.5, 1.0, 10.0, 1e3, 1e6, kInf}) {
    const double closed = std::isfinite(lambda) ? lambda / (4.0 * kPi * kPi * (1.0 + lambda)) : 1.0 / (4.0 * kPi * kPi);
    const double got = coupling_constants(params(0.0, lambda)).c_II.value;
    worst = std::max(worst, std::abs(got - closed) / closed);
  }
  o.require(worst <= 1e-10, fmt("c_II worst rel %.2e", worst));
  const double c_i = coupling_constants(params(0.0, kInf)).c_I.value;
  const double c_i_rel = std::abs(c_i - 1.0 / (8.0 * kPi)) * 8.0 * kPi;
  o.require(c_i_rel <= 1e-10, fmt("c_I(inf) rel %.2e", c_i_rel));
  // Growth rate of the norm against ln(lambda), fitted over [1e2, 1e6].
  std::vector<double> x, y;
  for (int i = 0; i <= 8; ++i) {
    const double lambda = std::pow(10.0, 2.0 + 0.5 * i);
    x.push_back(std::log(lambda));
    y.push_back(coupling_constants(params(0.0, lambda)).phi_norm_sq.value);
  }
  const double slope = linear_slope(x, y);
  const double slope_rel = std::abs(slope * 4.0 * kPi * kPi - 1.0);
  o.require(slope_rel <= 0.02, fmt("d|phi|^2/dln(lambda) * 4pi^2 = %.6f", slope * 4.0 * kPi * kPi));
  const double ratio_hi = y.back() / x.back() * 4.0 * kPi * kPi;
  o.require(coupling_constants(params(0.0, kInf)).phi_norm_sq.divergent, "divergence flag at infinity");
  o.detail = fmt("c_II rel %.1e, c_I rel %.1e, ", worst, c_i_rel) +
             fmt("norm slope*4pi^2 %.5f, ratio at 1e6 %.4f", slope * 4.0 * kPi * kPi, ratio_hi) +
             (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome dual_path_vevs() {
  Outcome o;
  const ModelParams p = params(0.0, 1.0);
  const BasisSpec spec{3, 4, 3};
  const auto vevs = wick::builtin_vevs();
  const auto a4_expr = wick::vev_integrand(vevs.at("a4"), p);
  const quad::QuadResult grid = quad::integrate_grid3d(quad::reduce_two_photon(a4_expr, p), 48);
  const quad::QuadResult mc = quad::integrate_mc(a4_expr, 1'000'000, 7, p);
  const quad::QuadResult mat = cli::matrix_path_estimate(vevs.at("a4"), p, spec);
  auto agree = [&](const char* name, const quad::QuadResult& a, const quad::QuadResult& b) {
    const double diff = std::abs(a.value - b.value), comb = std::hypot(a.error, b.error);
    o.require(diff <= 3.0 * comb, std::string(name) + fmt(": |diff| %.3e vs 3 sigma %.3e", diff, 3.0 * comb));
    return diff / comb;
  };
  std::ostringstream d;
  d.precision(3);
  d << "a4 grid/mc " << agree("a4 grid-mc", grid, mc) << "s";
  d << ", grid/matrix " << agree("a4 grid-matrix", grid, mat) << "s";
  d << ", mc/matrix " << agree("a4 mc-matrix", mc, mat) << "s";
  for (const char* name : {"b1", "b2", "b3"}) {
    const quad::QuadResult m = quad::integrate_mc(wick::vev_integrand(vevs.at(name), p), 1'000'000, 7, p);
    const quad::QuadResult b = cli::matrix_path_estimate(vevs.at(name), p, spec);
    d << ", " << name << " " << agree(name, m, b) << "s";
  }
  o.detail = d.str() + (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome order_reproduction_check() {
  Outcome o;
  const FockBasis b(build_mode_grid(3, 4, params(0.0, 1.0)), 3);
  const OrderFit f = order_reproduction(b, params(0.0, 1.0), {0.05, 0.1, 0.2, 0.3});
  o.require(f.slope >= 6.5, fmt("slope %.4f", f.slope));
  o.detail = fmt("dim %g, log-log slope %.4f", static_cast<double>(b.dim()), f.slope) + (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome variational_ordering() {
  Outcome o;
  double worst_margin = kInf, ratio_l = 0, ratio_t = 0;
  for (auto [nr, na] : {std::pair<std::size_t, std::size_t>{2, 3}, {3, 4}}) {
    const FockBasis b(build_mode_grid(nr, na, params(0.0, 1.0)), 3);
    const MatrixCoefficients m = matrix_path_coefficients(FockOperators(b, params(0.0, 1.0)));
    for (double e : {0.02, 0.05, 0.1, 0.2, 0.3}) {
      const ModelParams p = params(e, 1.0);
      const SparseOp t = assemble_T(b, p);
      const double trial = rayleigh_quotient(t, trial_state_selfenergy(b, p));
      const double ground = lanczos_ground(t, 1e-13, 3000, 1).value;
      worst_margin = std::min(worst_margin, trial - ground);
      if (e == 0.02) {
        const double lead = -std::pow(e, 4) * m.a4;
        ratio_l = ground / lead;
        ratio_t = trial / lead;
        o.require(std::abs(ratio_l - 1.0) <= 0.05, fmt("lanczos ratio %.5f", ratio_l));
        o.require(std::abs(ratio_t - 1.0) <= 0.05, fmt("trial ratio %.5f", ratio_t));
      }
    }
  }
  o.require(worst_margin >= -1e-10, fmt("margin %.3e", worst_margin));
  o.detail = fmt("min(trial - lanczos) %.3e, ratios at e=0.02: %.5f / %.5f", worst_margin, ratio_l, ratio_t) +
             (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome lemma_suite_check() {
  Outcome o;
  const double e = 0.1;
  auto suite = [&](std::size_t nr, std::size_t na, double lambda) {
    const FockBasis b(build_mode_grid(nr, na, params(e, lambda)), 3);
    LemmaSuiteOptions opts;
    opts.grid_level = std::to_string(nr) + "x" + std::to_string(na);
    std::map<std::string, FormBoundReport> out;
    for (auto& r : lemma_suite(b, params(e, lambda), opts)) out.emplace(r.lemma_id, r);
    return out;
  };
  const auto base = suite(2, 3, 1.0);
  for (const auto& [id, r] : base) o.require(r.passed(1e-10), id + " margin " + fmt("%.2e", r.margin));

  const auto fine = suite(3, 4, 1.0);
  std::ostringstream refine;
  refine.precision(3);
  for (const auto& [id, r] : base) {
    if (r.gram_draws > 0) continue;
    const double change = std::abs(fine.at(id).c_star - r.c_star) / std::abs(r.c_star);
    if (change > 0.10) refine << (refine.tellp() ? " " : "") << id << "=" << 100.0 * change << "%";
    o.require(fine.at(id).passed(1e-10), id + " on the refined grid");
  }
  o.require(refine.str().empty(), "refinement change >10%: " + refine.str());

  const auto l10 = suite(2, 3, 10.0), l100 = suite(2, 3, 100.0);
  std::ostringstream spread;
  spread.precision(3);
  for (const auto& [id, r] : base) {
    if (r.gram_draws > 0) continue;
    const double lo = std::min({r.c_star, l10.at(id).c_star, l100.at(id).c_star});
    const double hi = std::max({r.c_star, l10.at(id).c_star, l100.at(id).c_star});
    if (hi > 2.0 * lo) spread << (spread.tellp() ? " " : "") << id << "=" << hi / lo << "x";
  }
  o.require(spread.str().empty(), "cutoff spread >2x: " + spread.str());

  const FockBasis b12(build_mode_grid(2, 3, params(e, 1.0)), 3);
  const double res = verify_resolvent_identity(b12, params(e, 1.0));
  o.require(res <= 1e-10, fmt("resolvent residual %.2e", res));
  if (o.pass) o.detail = fmt("all pass, resolvent residual %.1e", res);
  return o;
}

Outcome hydrogen_reference() {
  Outcome o;
  double worst = 0.0;
  for (double e : {0.05, 0.1, 0.2, 0.3}) {
    for (double z : {1.0, 2.0}) {
      const HydrogenRef h = hydrogen_ground(params(e, 1.0, z));
      const double e_at = -std::pow(z * e * e / (4.0 * kPi), 2) / 4.0;
      worst = std::max(worst, std::abs(h.E_at - e_at) / std::abs(e_at));
      o.require(h.p2_moment == -2.0 * h.E_at, "p2 moment identity");
    }
  }
  o.require(worst <= 4.0 * std::numeric_limits<double>::epsilon(), fmt("E_at rel %.2e", worst));
  double min_bin = kInf;
  for (double e : {0.05, 0.1, 0.2, 0.3}) {
    for (double lambda : {1.0, 10.0, 100.0, kInf}) {
      for (double z : {0.0, 1.0, 2.0}) min_bin = std::min(min_bin, binding_expansion(params(e, lambda, z)).E_bin_expansion);
    }
  }
  o.require(min_bin >= 0.0, fmt("min E_bin %.3e", min_bin));
  o.detail = fmt("E_at rel %.1e, min E_bin %.3e", worst, min_bin) + (o.pass ? "" : "; " + o.detail);
  return o;
}

std::string capture(const std::vector<std::string>& args, int& code) {
  std::ostringstream out, err;
  code = cli::run(args, out, err);
  return out.str();
}

Outcome determinism() {
  Outcome o;
  const std::vector<std::vector<std::string>> runs = {
      {"vev", "--name", "b1", "--method", "mc", "--budget", "200000", "--seed", "5", "--lambda", "1"},
      {"sweep", "--e-list", "0.1,0.2", "--lambda-list", "1,10", "--n-radial", "2", "--n-angular", "3", "--budget",
       "50000", "--grid-points", "16", "--seed", "5"},
      {"selfenergy", "--e", "0.1", "--n-radial", "2", "--n-angular", "3", "--budget", "50000", "--grid-points", "16"},
  };
  std::size_t bytes = 0;
  for (const auto& args : runs) {
    std::string reference;
    for (const char* workers : {"1", "2", "8"}) {
      setenv("NELSON_WORKERS", workers, 1);
      int code = 0;
      const std::string artifact = capture(args, code);
      o.require(code == 0, args[0] + " exit code");
      if (reference.empty()) reference = artifact;
      o.require(artifact == reference, args[0] + " differs with " + workers + " workers");
    }
    bytes += reference.size();
  }
  unsetenv("NELSON_WORKERS");
  o.detail = fmt("%g artifacts, %g bytes, identical across 1/2/8 workers", static_cast<double>(runs.size()),
                 static_cast<double>(bytes)) +
             (o.pass ? "" : "; " + o.detail);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expect_fail;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--expect-fail" && i + 1 < argc) {
      expect_fail.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--expect-fail N]...\n", argv[0]);
      return 2;
    }
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"binding coefficient", binding_coefficient},
      {"coupling constants", coupling_constants_check},
      {"dual-path expectation values", dual_path_vevs},
      {"order reproduction", order_reproduction_check},
      {"variational ordering", variational_ordering},
      {"form-bound lemmas", lemma_suite_check},
      {"hydrogen reference", hydrogen_reference},
      {"determinism", determinism},
  };
  int status = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& ex) {
      out.pass = false;
      out.detail = std::string("exception: ") + ex.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool expected = expect_fail.count(id) > 0;
    std::printf("%s %d %s (%.1fs): %s%s\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), secs,
                out.detail.c_str(), expected ? " [expected failure]" : "");
    std::fflush(stdout);
    if (out.pass == expected) status = 1;
  }
  return status;
}
