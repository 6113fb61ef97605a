#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nelson/serialize.hpp"

namespace nelson::cli {

enum class Command { Coeffs, SelfEnergy, Binding, Vev, Lemmas, Sweep };

std::string to_string(Command c);
Command command_from_string(const std::string& s);

struct Budgets {
  std::size_t mc = 1'000'000;
  std::size_t grid_points = 48;
  double tol = 1e-14;
  std::size_t gram_draws = 1000;
  bool operator==(const Budgets&) const = default;
};

struct RunConfig {
  Command command = Command::Coeffs;
  ModelParams params;
  bool derived_ir_shift = false;  // ir_shift = e^7
  BasisSpec grid;
  Budgets budgets;
  std::uint64_t seed = 7;
  std::optional<std::string> out_path;
  std::optional<std::string> cache_dir;
  // vev
  std::string vev_name = "a4";
  std::optional<std::string> vev_string;
  std::string vev_method = "grid";
  // sweep
  // sweep; unset lists fall back to the single value in params
  std::optional<std::vector<double>> sweep_e;
  std::optional<std::vector<double>> sweep_lambda;

  /// Effective parameters for coupling e and cutoff lambda.
  ModelParams params_for(double e, double lambda) const;

  void validate() const;
  io::Json to_json() const;
  static RunConfig from_json(const io::Json& j);
};

inline constexpr const char* kSweepHeader =
    "e,z,lambda,n_radial,n_angular,n_max,E_at,a4,a4_err,b1,b1_err,b2,b2_err,b3,b3_err,E0_expansion,E0_lanczos,"
    "E0_trial,E_bin_expansion,residual_order_fit,seed";

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitLemma = 4;

/// Runs one command and returns its exit code. The artifact goes to
/// config.out_path when set, otherwise to `out`; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Executes a parsed configuration. Returns the exit code and the artifact.
int execute(const RunConfig& config, std::string& artifact, std::ostream& err);

/// Matrix-path value of a string with the error estimated from the next
/// coarser grid (n_radial - 1, n_angular - 1).
quad::QuadResult matrix_path_estimate(const wick::OpString& s, const ModelParams& params, const BasisSpec& spec);

}  // namespace nelson::cli
