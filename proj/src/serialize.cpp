#include "nelson/serialize.hpp"

#include <cstdio>
#include <sstream>

namespace nelson::io {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

void write(std::ostringstream& out, const Json& j, int indent, int depth) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (depth + 1)), ' ') : "";
  const std::string pad_close = indent > 0 ? std::string(static_cast<std::size_t>(indent * depth), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  const char* colon = indent > 0 ? ": " : ":";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << '{' << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ',' << nl;
        first = false;
        out << pad << Json(it.key()).dump() << colon;
        write(out, it.value(), indent, depth + 1);
      }
      out << nl << pad_close << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      out << '[' << nl;
      bool first = true;
      for (const auto& v : j) {
        if (!first) out << ',' << nl;
        first = false;
        out << pad;
        write(out, v, indent, depth + 1);
      }
      out << nl << pad_close << ']';
      return;
    }
    case Json::value_t::number_float: {
      const double x = j.get<double>();
      if (!std::isfinite(x)) {
        out << "null";
      } else {
        std::string s = format_double(x);
        // Keep floats recognisable as floats on re-parse.
        if (s.find_first_of(".eE") == std::string::npos) s += ".0";
        out << s;
      }
      return;
    }
    default:
      out << j.dump();
  }
}

Json optional_number(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

}  // namespace

std::string dump(const Json& j, int indent) {
  std::ostringstream out;
  write(out, j, indent, 0);
  return out.str();
}

Json lambda_to_json(double lambda) { return std::isfinite(lambda) ? Json(lambda) : Json("inf"); }

double lambda_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return kInf;
    throw ValidationError("lambda: expected a number or \"inf\", got \"" + s + "\"");
  }
  if (!j.is_number()) throw ValidationError("lambda: expected a number or \"inf\"");
  return j.get<double>();
}

Json to_json(const Estimate& e) {
  Json j;
  j["value"] = e.divergent ? Json(nullptr) : Json(e.value);
  j["stderr"] = optional_number(e.error);
  j["divergent"] = e.divergent;
  return j;
}

Json to_json(const ConstantsReport& r) {
  Json j;
  j["c_I"] = to_json(r.c_I);
  j["c_II"] = to_json(r.c_II);
  j["c_A"] = to_json(r.c_A);
  j["c_eps"] = to_json(r.c_eps);
  j["phi_norm_sq"] = to_json(r.phi_norm_sq);
  return j;
}

Json to_json(const quad::QuadResult& r) {
  Json j;
  j["value"] = r.value;
  j["stderr"] = r.error;
  j["n_evals"] = r.n_evals;
  j["method"] = quad::to_string(r.method);
  j["seed"] = r.seed ? Json(*r.seed) : Json(nullptr);
  return j;
}

quad::QuadResult quad_result_from_json(const Json& j) {
  quad::QuadResult r;
  r.value = j.at("value").get<double>();
  r.error = j.at("stderr").get<double>();
  r.n_evals = j.at("n_evals").get<std::size_t>();
  const auto m = j.at("method").get<std::string>();
  if (m == "adaptive1d") r.method = quad::Method::Adaptive1d;
  else if (m == "grid3d") r.method = quad::Method::Grid3d;
  else if (m == "mc") r.method = quad::Method::MonteCarlo;
  else if (m == "matrix") r.method = quad::Method::Matrix;
  else throw ValidationError("unknown quadrature method \"" + m + "\"");
  if (!j.at("seed").is_null()) r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

Json to_json(const wick::ContractionDiagram& d) {
  Json j;
  Json pairing = Json::array();
  for (const auto& l : d.lines) pairing.push_back({l.annihilator, l.creator});
  j["pairing"] = pairing;
  j["multiplicity"] = d.multiplicity;
  j["denominators"] = d.denominators;
  return j;
}

Json to_json(const MatrixCoefficients& c) {
  Json j;
  j["a4"] = c.a4;
  j["b1"] = c.b1;
  j["b2"] = c.b2;
  j["b3"] = c.b3;
  return j;
}

Json to_json(const HydrogenRef& h) {
  Json j;
  j["gamma"] = h.gamma;
  j["E_at"] = h.E_at;
  j["p2_moment"] = h.p2_moment;
  return j;
}

Json to_json(const EnergyReport& r) {
  Json j;
  j["e"] = r.e;
  j["Z"] = r.z;
  j["lambda"] = lambda_to_json(r.lambda);
  j["ir_shift"] = r.ir_shift;
  j["E_at"] = r.E_at;
  auto quad_or_null = [](const std::optional<quad::QuadResult>& q) { return q ? to_json(*q) : Json(nullptr); };
  j["a4"] = quad_or_null(r.a4);
  j["b1"] = quad_or_null(r.b1);
  j["b2"] = quad_or_null(r.b2);
  j["b3"] = quad_or_null(r.b3);
  j["matrix_path"] = r.matrix ? to_json(*r.matrix) : Json(nullptr);
  j["E0_expansion"] = r.E0_expansion;
  j["E0_lanczos"] = optional_number(r.E0_lanczos);
  j["E0_trial"] = optional_number(r.E0_trial);
  j["E_bin_expansion"] = r.E_bin_expansion;
  Json res = Json::object();
  for (const auto& [k, v] : r.residuals) res[k] = v;
  j["residuals"] = res;
  return j;
}

Json to_json(const FormBoundReport& r) {
  Json j;
  j["lemma_id"] = r.lemma_id;
  j["alpha"] = r.alpha;
  j["c_star"] = r.unbounded ? Json(nullptr) : Json(r.c_star);
  j["margin"] = r.margin;
  j["grid_level"] = r.grid_level;
  j["lambda"] = lambda_to_json(r.lambda);
  j["unbounded"] = r.unbounded;
  if (r.gram_draws > 0) {
    j["gram_draws"] = r.gram_draws;
    j["gram_violations"] = r.gram_violations;
  }
  if (r.reference_bound) j["reference_bound"] = *r.reference_bound;
  j["passed"] = r.passed();
  return j;
}

Json to_json(const CEpsBound& b) {
  Json j;
  j["value"] = b.value;
  j["stderr"] = b.error;
  j["prefactor"] = b.prefactor;
  j["intercept"] = b.intercept;
  j["c_II"] = b.c_II;
  return j;
}

}  // namespace nelson::io
