#include "nelson/wick.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "nelson/fock.hpp"

namespace nelson::wick {

namespace {

bool is_ladder(OpKind k) { return k == OpKind::Annihilate || k == OpKind::Create; }

// A matching as lines sorted by annihilator slot.
using Matching = std::vector<PhotonLine>;

void enumerate_matchings(const std::vector<int>& annihilators, const std::vector<int>& creators, std::size_t next,
                         std::vector<bool>& used, Matching& current, std::vector<Matching>& out) {
  if (next == annihilators.size()) {
    out.push_back(current);
    return;
  }
  const int a = annihilators[next];
  for (std::size_t c = 0; c < creators.size(); ++c) {
    if (used[c] || creators[c] < a) continue;  // creator left of annihilator: blocked
    used[c] = true;
    current.push_back({a, creators[c]});
    enumerate_matchings(annihilators, creators, next + 1, used, current, out);
    current.pop_back();
    used[c] = false;
  }
}

Matching relabel(const Matching& m, int s1, int s2) {
  Matching out = m;
  for (auto& line : out) {
    for (int* slot : {&line.annihilator, &line.creator}) {
      if (*slot == s1) *slot = s2;
      else if (*slot == s2) *slot = s1;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> crossing_lines(const Matching& m, int slot) {
  std::vector<int> lines;
  for (std::size_t l = 0; l < m.size(); ++l) {
    if (m[l].annihilator < slot && slot < m[l].creator) lines.push_back(static_cast<int>(l));
  }
  return lines;
}

int line_at_slot(const Matching& m, int slot) {
  for (std::size_t l = 0; l < m.size(); ++l) {
    if (m[l].annihilator == slot || m[l].creator == slot) return static_cast<int>(l);
  }
  return -1;
}

}  // namespace

OpString::OpString(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

OpString OpString::parse(std::string_view text) {
  std::vector<Token> tokens;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == ' ' || c == '\t') continue;
    if (c == 'A') {
      if (i + 1 < text.size() && text[i + 1] == '*') {
        tokens.push_back({OpKind::Create});
        ++i;
      } else {
        tokens.push_back({OpKind::Annihilate});
      }
    } else if (c == 'P') {
      tokens.push_back({OpKind::Momentum});
    } else if (c == 'R') {
      tokens.push_back({OpKind::Resolvent});
    } else {
      throw ValidationError(std::string("operator string: unexpected character '") + c + "' in \"" +
                            std::string(text) + "\"");
    }
  }
  if (tokens.empty()) throw ValidationError("operator string is empty");

  int pending = -1;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens[i].is_vector()) continue;
    if (pending < 0) {
      pending = static_cast<int>(i);
      continue;
    }
    if (tokens[i].kind == OpKind::Momentum && tokens[pending].kind == OpKind::Momentum) {
      throw ValidationError("operator string: P.P pairs are not supported");
    }
    tokens[i].partner = pending;
    tokens[pending].partner = static_cast<int>(i);
    pending = -1;
  }
  if (pending >= 0) throw ValidationError("operator string: odd number of vector operators");
  return OpString(std::move(tokens));
}

int OpString::count(OpKind kind) const {
  return static_cast<int>(std::count_if(tokens_.begin(), tokens_.end(), [kind](const Token& t) { return t.kind == kind; }));
}

OpString OpString::adjoint() const {
  const int n = static_cast<int>(tokens_.size());
  std::vector<Token> out(tokens_.rbegin(), tokens_.rend());
  for (auto& t : out) {
    if (t.kind == OpKind::Annihilate) t.kind = OpKind::Create;
    else if (t.kind == OpKind::Create) t.kind = OpKind::Annihilate;
    if (t.partner >= 0) t.partner = n - 1 - t.partner;
  }
  return OpString(std::move(out));
}

std::string OpString::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const Token& t = tokens_[i];
    if (t.kind == OpKind::Resolvent) {
      if (!out.empty()) out += ' ';
      out += 'R';
      continue;
    }
    if (i > 0 && tokens_[i - 1].kind == OpKind::Resolvent) out += ' ';
    switch (t.kind) {
      case OpKind::Annihilate: out += "A"; break;
      case OpKind::Create: out += "A*"; break;
      case OpKind::Momentum: out += "P"; break;
      default: break;
    }
  }
  return out;
}

void OpString::validate_vev() const {
  if (tokens_.empty()) throw ValidationError("operator string is empty");
  if (!balanced()) {
    std::ostringstream msg;
    msg << "operator string \"" << to_string() << "\" is unbalanced: " << count(OpKind::Annihilate)
        << " annihilators vs " << count(OpKind::Create) << " creators";
    throw ValidationError(msg.str());
  }
  if (tokens_.front().kind == OpKind::Resolvent || tokens_.back().kind == OpKind::Resolvent) {
    throw ValidationError("operator string: a resolvent may not act on the vacuum slot");
  }
  for (const auto& t : tokens_) {
    if (t.is_vector() && t.partner < 0) throw ValidationError("operator string: unpaired vector operator");
  }
}

std::vector<ContractionDiagram> expand_vev(const OpString& s) {
  s.validate_vev();
  const auto& tokens = s.tokens();
  std::vector<int> annihilators, creators, resolvents;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].kind == OpKind::Annihilate) annihilators.push_back(static_cast<int>(i));
    if (tokens[i].kind == OpKind::Create) creators.push_back(static_cast<int>(i));
    if (tokens[i].kind == OpKind::Resolvent) resolvents.push_back(static_cast<int>(i));
  }

  std::vector<Matching> matchings;
  std::vector<bool> used(creators.size(), false);
  Matching current;
  enumerate_matchings(annihilators, creators, 0, used, current, matchings);

  // Transpositions of two identical ladder operators dotted with each other.
  std::vector<std::pair<int, int>> symmetries;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int p = tokens[i].partner;
    if (p > static_cast<int>(i) && is_ladder(tokens[i].kind) && tokens[i].kind == tokens[p].kind) {
      symmetries.emplace_back(static_cast<int>(i), p);
    }
  }

  std::set<Matching> seen;
  std::vector<ContractionDiagram> out;
  for (const auto& m : matchings) {
    if (seen.count(m)) continue;
    std::set<Matching> orbit{m};
    std::vector<Matching> frontier{m};
    while (!frontier.empty()) {
      Matching x = frontier.back();
      frontier.pop_back();
      for (auto [s1, s2] : symmetries) {
        Matching y = relabel(x, s1, s2);
        if (orbit.insert(y).second) frontier.push_back(y);
      }
    }
    seen.insert(orbit.begin(), orbit.end());
    const Matching& rep = *orbit.begin();

    ContractionDiagram d;
    d.lines = rep;
    d.multiplicity = static_cast<int>(orbit.size());
    d.resolvent_slots = resolvents;
    bool vanishes = false;
    for (int r : resolvents) {
      d.denominators.push_back(crossing_lines(rep, r));
      // Only the vacuum crosses: the reduced resolvent annihilates it.
      if (d.denominators.back().empty()) vanishes = true;
    }
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const int p = tokens[i].partner;
      if (p <= static_cast<int>(i)) continue;
      const int left = static_cast<int>(i);
      DotFactor f;
      if (tokens[left].kind == OpKind::Momentum || tokens[p].kind == OpKind::Momentum) {
        const int phi_slot = tokens[left].kind == OpKind::Momentum ? p : left;
        const int mom_slot = tokens[left].kind == OpKind::Momentum ? left : p;
        f.kind = DotFactor::Kind::PhiMomentum;
        f.line_a = line_at_slot(rep, phi_slot);
        f.momentum_lines = crossing_lines(rep, mom_slot);
        if (f.momentum_lines.empty()) vanishes = true;
      } else {
        f.kind = DotFactor::Kind::PhiPhi;
        f.line_a = line_at_slot(rep, left);
        f.line_b = line_at_slot(rep, p);
      }
      d.dots.push_back(std::move(f));
    }
    if (!vanishes) out.push_back(std::move(d));
  }
  return out;
}

double IntegrandExpr::evaluate(std::span<const Vec3> k, const ModelParams& params) const {
  if (static_cast<int>(k.size()) != n_vars) {
    throw ValidationError("integrand expects " + std::to_string(n_vars) + " momenta, got " + std::to_string(k.size()));
  }
  constexpr int kMaxVars = 8;
  if (n_vars > kMaxVars) throw ValidationError("integrand has too many momentum variables");
  double mag[kMaxVars], phi[kMaxVars];
  for (int i = 0; i < n_vars; ++i) {
    mag[i] = norm(k[i]);
    if (mag[i] == 0.0) throw SingularInputError("integrand evaluated at k = 0");
    if (!(mag[i] < params.lambda)) return 0.0;
    phi[i] = form_factor_magnitude(mag[i], params.lambda);
  }
  double total = 0.0;
  for (const auto& term : terms) {
    double value = term.coefficient;
    for (const auto& f : term.numerator) {
      const int a = f.line_a;
      if (f.kind == DotFactor::Kind::PhiPhi) {
        const int b = f.line_b;
        value *= phi[a] * phi[b] * dot(k[a], k[b]) / (mag[a] * mag[b]);
      } else {
        Vec3 p{0.0, 0.0, 0.0};
        for (int l : f.momentum_lines) p = p + k[l];
        value *= phi[a] * dot(k[a], p) / mag[a];
      }
    }
    for (const auto& subset : term.denominators) {
      Vec3 p{0.0, 0.0, 0.0};
      double h = 0.0;
      for (int l : subset) {
        p = p + k[l];
        h += mag[l];
      }
      value /= dot(p, p) + h + params.ir_shift;
    }
    total += value;
  }
  return total;
}

IntegrandExpr diagram_integrand(const ContractionDiagram& d, const ModelParams&) {
  IntegrandExpr expr;
  expr.n_vars = static_cast<int>(d.lines.size());
  expr.terms.push_back({static_cast<double>(d.multiplicity), d.dots, d.denominators});
  return expr;
}

IntegrandExpr vev_integrand(const OpString& s, const ModelParams& params) {
  IntegrandExpr expr;
  expr.n_vars = s.count(OpKind::Create);
  for (const auto& d : expand_vev(s)) {
    IntegrandExpr part = diagram_integrand(d, params);
    expr.terms.insert(expr.terms.end(), part.terms.begin(), part.terms.end());
  }
  return expr;
}

std::map<std::string, OpString> builtin_vevs() {
  return {
      {"a4", OpString::parse("AA R A*A*")},
      {"b1", OpString::parse("AA R PA R A*P R A*A*")},
      {"b2", OpString::parse("AA R A*P R PA R A*A*")},
      {"b3", OpString::parse("AA R A*A R A*A*")},
  };
}

namespace {

FockVector apply_component(const Token& t, int j, const FockOperators& ops, const FockVector& v) {
  switch (t.kind) {
    case OpKind::Annihilate: return ops.field().a[j].apply(v);
    case OpKind::Create: return ops.field().a[j].apply_adjoint(v);
    case OpKind::Momentum: return ops.diag().p[j].cwiseProduct(v);
    case OpKind::Resolvent: return ops.resolvent(v);
  }
  return v;
}

}  // namespace

Eigen::VectorXcd apply_string(const OpString& s, const FockOperators& ops, const Eigen::VectorXcd& v) {
  if (static_cast<std::size_t>(v.size()) != ops.dim()) throw ValidationError("apply_string: vector size mismatch");
  const auto& tokens = s.tokens();
  FockVector x = v;
  int pos = static_cast<int>(tokens.size()) - 1;
  while (pos >= 0) {
    const Token& t = tokens[pos];
    if (t.kind == OpKind::Resolvent) {
      x = ops.resolvent(x);
      --pos;
      continue;
    }
    const int left = t.partner;
    if (left < 0 || left > pos) throw ValidationError("apply_string: malformed dot pairing");
    FockVector sum = FockVector::Zero(x.size());
    for (int j = 0; j < 3; ++j) {
      FockVector y = apply_component(t, j, ops, x);
      for (int q = pos - 1; q > left; --q) y = apply_component(tokens[q], j, ops, y);
      sum += apply_component(tokens[left], j, ops, y);
    }
    x = std::move(sum);
    pos = left - 1;
  }
  return x;
}

namespace {

SparseBlock apply_component(const Token& t, int j, const FockOperators& ops, const SparseBlock& x) {
  SparseBlock y;
  switch (t.kind) {
    case OpKind::Annihilate: y = ops.field().a[j].matrix() * x; break;
    case OpKind::Create: y = ops.field().a[j].matrix().adjoint() * x; break;
    case OpKind::Momentum: y = ops.diag().p[j].cast<Complex>().asDiagonal() * x; break;
    case OpKind::Resolvent: {
      const Eigen::VectorXd& d = ops.diag().d_f;
      Eigen::VectorXcd inv = Eigen::VectorXcd::Zero(d.size());
      for (Eigen::Index i = 1; i < d.size(); ++i) {
        if (std::abs(d(i)) <= ops.kernel_tol()) {
          throw DegenerateGridError("resolvent: excited state " + std::to_string(i) + " has vanishing D_f");
        }
        inv(i) = 1.0 / d(i);
      }
      y = inv.asDiagonal() * x;
      break;
    }
  }
  y.prune(Complex(0.0));
  return y;
}

}  // namespace

SparseBlock apply_string(const OpString& s, const FockOperators& ops, const SparseBlock& columns) {
  if (static_cast<std::size_t>(columns.rows()) != ops.dim()) {
    throw ValidationError("apply_string: block row count mismatch");
  }
  const auto& tokens = s.tokens();
  SparseBlock x = columns;
  int pos = static_cast<int>(tokens.size()) - 1;
  while (pos >= 0) {
    const Token& t = tokens[pos];
    if (t.kind == OpKind::Resolvent) {
      x = apply_component(t, 0, ops, x);
      --pos;
      continue;
    }
    const int left = t.partner;
    if (left < 0 || left > pos) throw ValidationError("apply_string: malformed dot pairing");
    SparseBlock sum(x.rows(), x.cols());
    for (int j = 0; j < 3; ++j) {
      SparseBlock y = apply_component(t, j, ops, x);
      for (int q = pos - 1; q > left; --q) y = apply_component(tokens[q], j, ops, y);
      sum += apply_component(tokens[left], j, ops, y);
    }
    x = std::move(sum);
    pos = left - 1;
  }
  return x;
}

double matrix_vev(const OpString& s, const FockOperators& ops) {
  s.validate_vev();
  // The truncation must hold every intermediate photon number.
  int photons = 0, peak = 0;
  for (auto it = s.tokens().rbegin(); it != s.tokens().rend(); ++it) {
    if (it->kind == OpKind::Create) peak = std::max(peak, ++photons);
    if (it->kind == OpKind::Annihilate) --photons;
  }
  if (static_cast<std::size_t>(peak) > ops.basis().n_max()) {
    throw ValidationError("matrix_vev: string \"" + s.to_string() + "\" needs N_max >= " + std::to_string(peak));
  }
  return apply_string(s, ops, ops.vacuum())(0).real();
}

}  // namespace nelson::wick
