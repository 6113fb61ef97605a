#pragma once

#include <cstdint>
#include <functional>

#include "nelson/fock.hpp"

namespace nelson {

using LinearOperator = std::function<FockVector(const FockVector&)>;

struct LanczosOptions {
  double tol = 1e-12;  // relative to the running spectral-radius estimate
  std::size_t max_iter = 2000;
  std::uint64_t seed = 1;
};

struct LanczosResult {
  double value = 0.0;  // Rayleigh quotient of the returned vector
  FockVector vector;   // unit norm
  double residual = 0.0;
  std::size_t iterations = 0;
};

/// Smallest eigenpair of a Hermitian operator given as a matvec. Full
/// reorthogonalization, seeded random start. Throws ConvergenceError with
/// the best Ritz value when max_iter is reached first.
LanczosResult lanczos_smallest(const LinearOperator& op, std::size_t dim, const LanczosOptions& options = {});

/// Largest eigenpair, through the negated operator.
LanczosResult lanczos_largest(const LinearOperator& op, std::size_t dim, const LanczosOptions& options = {});

/// Ground state of a sparse Hermitian operator. Diagonal operators are
/// answered exactly.
LanczosResult lanczos_ground(const SparseOp& op, double tol = 1e-12, std::size_t max_iter = 2000,
                             std::uint64_t seed = 1);

}  // namespace nelson
