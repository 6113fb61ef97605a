#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "nelson/modes.hpp"

namespace nelson {

class FockOperators;

namespace wick {

enum class OpKind { Annihilate, Create, Momentum, Resolvent };

/// One operator in a string. Vector operators (A, A*, field momentum) carry
/// the slot of their dot-product partner; resolvents carry -1.
struct Token {
  OpKind kind;
  int partner = -1;

  bool is_vector() const { return kind != OpKind::Resolvent; }
  bool operator==(const Token&) const = default;
};

/// Operator string such as "AA R PA R A*P R A*A*".
///
/// Tokens: `A` (annihilation, smeared with phi), `A*` (creation), `P` (field
/// momentum), `R` (resolvent D_f^{-1}). Vector tokens are dot-contracted in
/// consecutive pairs from the left, so "AAA*P" means (A.A)(A*.P).
class OpString {
 public:
  OpString() = default;
  explicit OpString(std::vector<Token> tokens);

  static OpString parse(std::string_view text);

  const std::vector<Token>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  int count(OpKind kind) const;

  /// Reversed string with A <-> A*; P and R are self-adjoint.
  OpString adjoint() const;
  std::string to_string() const;

  bool balanced() const { return count(OpKind::Annihilate) == count(OpKind::Create); }

  /// Throws ValidationError unless the string is a valid vacuum-to-vacuum
  /// expectation: balanced, with no resolvent at either end.
  void validate_vev() const;

  bool operator==(const OpString&) const = default;

 private:
  std::vector<Token> tokens_;
};

/// A photon line: annihilated at slot `annihilator`, created at slot
/// `creator` (creator > annihilator, operators act right to left).
struct PhotonLine {
  int annihilator;
  int creator;
  bool operator==(const PhotonLine&) const = default;
  auto operator<=>(const PhotonLine&) const = default;
};

/// A factor of the integrand numerator: phi(k_a).phi(k_b), or
/// phi(k_a).(sum of momenta of `momentum_lines`).
struct DotFactor {
  enum class Kind { PhiPhi, PhiMomentum };
  Kind kind;
  int line_a;
  int line_b = -1;
  std::vector<int> momentum_lines;
  bool operator==(const DotFactor&) const = default;
};

struct ContractionDiagram {
  std::vector<PhotonLine> lines;                // canonical representative
  int multiplicity = 1;                         // number of matchings in this class
  std::vector<int> resolvent_slots;             // in string order
  std::vector<std::vector<int>> denominators;   // crossing lines per resolvent
  std::vector<DotFactor> dots;
};

/// Sum of rational monomials in the photon momenta.
///
/// Each term is coefficient * prod(numerator dots) / prod_S (|P_S|^2 + H_S + eps)
/// with P_S, H_S the total momentum and energy of the line subset S.
struct IntegrandExpr {
  struct Term {
    double coefficient = 1.0;
    std::vector<DotFactor> numerator;
    std::vector<std::vector<int>> denominators;
  };

  int n_vars = 0;
  std::vector<Term> terms;

  /// Evaluates at momenta k (size n_vars). Points outside the cutoff give 0.
  double evaluate(std::span<const Vec3> k, const ModelParams& params) const;
};

/// All contraction classes of a vacuum expectation value. Matchings where an
/// annihilator sits to the right of its creator are dropped; matchings
/// related by swapping the two members of a symmetric pair (A.A or A*.A*)
/// are merged into one class.
std::vector<ContractionDiagram> expand_vev(const OpString& s);

IntegrandExpr diagram_integrand(const ContractionDiagram& d, const ModelParams& params);

/// Sum of the integrands of all classes of `s`.
IntegrandExpr vev_integrand(const OpString& s, const ModelParams& params);

/// The four vacuum expectations of the self-energy expansion, keyed
/// a4, b1, b2, b3.
std::map<std::string, OpString> builtin_vevs();

/// Prefactors of e^4 a4, e^6 b1, e^6 b2, e^6 b3 in the ground-energy expansion.
struct ExpansionSigns {
  double a4 = -1.0;
  double b1 = -4.0;
  double b2 = -4.0;
  double b3 = 2.0;
};
inline constexpr ExpansionSigns kExpansionSigns{};

/// Applies the string to a Fock vector (rightmost token first).
Eigen::VectorXcd apply_string(const OpString& s, const FockOperators& ops, const Eigen::VectorXcd& v);

/// Applies the string to every column of a sparse block.
using SparseBlock = Eigen::SparseMatrix<Complex, Eigen::ColMajor, std::int64_t>;
SparseBlock apply_string(const OpString& s, const FockOperators& ops, const SparseBlock& columns);

/// <Omega| s |Omega> on a truncated basis.
double matrix_vev(const OpString& s, const FockOperators& ops);

}  // namespace wick
}  // namespace nelson
