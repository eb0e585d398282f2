#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochwave/analysis.hpp"
#include "stochwave/operators.hpp"

namespace stochwave {

/// Bad config text or a violated invariant. `line` and `column` are 1-based
/// and 0 when the error is not tied to a location.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& message, int line = 0, int column = 0);
  [[nodiscard]] int line() const { return line_; }
  [[nodiscard]] int column() const { return column_; }

private:
  int line_;
  int column_;
};

struct InitialData {
  std::string kind = "zero";  // zero | sine | exact
  double amplitude = 1.0;
  int mode = 1;
  friend bool operator==(const InitialData&, const InitialData&) = default;
};

struct NoiseConfig {
  std::string kind = "zero";  // zero | spectral
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double s = 1.0;
  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

struct ForcingConfig {
  std::string kind = "none";  // none | constant | manufactured
  double amplitude = 1.0;
  friend bool operator==(const ForcingConfig&, const ForcingConfig&) = default;
};

struct ProblemConfig {
  std::string model = "fem";     // fem | scalar
  std::string damping = "rho";   // rho | linear
  double mu = 1.0;               // linear damping coefficient (a for the scalar model)
  double b = 1.0;                // elastic coefficient
  NoiseConfig noise;
  InitialData u0;
  InitialData v0;
  ForcingConfig forcing;
  double scalar_u0 = 0.0;        // scalar model initial data
  double scalar_v0 = 1.0;
  friend bool operator==(const ProblemConfig&, const ProblemConfig&) = default;
};

struct DiscretizationConfig {
  int steps = 64;      // N
  int m = 31;
  int modes = 4;       // r
  double horizon = 1.0;
  friend bool operator==(const DiscretizationConfig&, const DiscretizationConfig&) = default;
};

struct SolverConfig {
  double tol = 1e-10;
  int max_iters = 200;
  double relaxation = 1.0;
  std::string strategy = "newton";  // newton | picard
  bool override_gate = false;
  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct LevelConfig {
  int steps = 0;
  int m = 0;
  friend bool operator==(const LevelConfig&, const LevelConfig&) = default;
};

struct ExperimentConfig {
  std::string kind = "single";  // single | energy | apriori | uniqueness | convergence | assumptions
  int paths = 1;
  std::uint64_t base_seed = 1;
  std::vector<LevelConfig> levels;
  std::optional<LevelConfig> reference;
  int samples = 10000;
  double defect_tolerance = 1e-8;
  double band = 4.0;
  double perturbation = 1e3;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct OutputConfig {
  std::string directory = "out";
  bool trajectories = false;
  friend bool operator==(const OutputConfig&, const OutputConfig&) = default;
};

/// Constants derived while validating; echoed, never read back.
struct DerivedConstants {
  double lambda = 0.0;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  double kappa = 0.0;
  double mu_a = 0.0;
  double mu_b = 0.0;
  double lambda_tau = 0.0;  // largest lambda * tau over every grid the experiment uses
  friend bool operator==(const DerivedConstants&, const DerivedConstants&) = default;
};

struct RunConfig {
  ProblemConfig problem;
  DiscretizationConfig discretization;
  SolverConfig solver;
  ExperimentConfig experiment;
  OutputConfig output;
  DerivedConstants derived;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Reads the YAML document strictly: unknown keys and malformed values are
/// rejected with their location. No invariants are checked.
RunConfig parse_config(const std::string& text);

/// Checks every invariant, including lambda * tau < 1 on every grid the
/// experiment touches unless solver.override_gate is set, and fills
/// `derived`.
void validate(RunConfig& config);

RunConfig parse_and_validate(const std::string& text);

/// YAML echo; parse_and_validate(to_yaml(c)) == c for a validated c.
std::string to_yaml(const RunConfig& config);

/// Problem on a given mesh for the fem model.
ProblemSpec build_problem(const RunConfig& config, const Mesh1D& mesh);
/// The one-dimensional surrogate with unit mass: A = a, B = b, C = 0.
ProblemSpec build_scalar_problem(const RunConfig& config);
/// Problem for the configured discretization (either model).
ProblemSpec build_problem(const RunConfig& config);
/// Family over meshes, with the exact solution attached for manufactured forcing.
ProblemFamily build_family(const RunConfig& config);

SchemeParams scheme_params(const RunConfig& config, const ProblemSpec& spec);

/// Levels and reference of a convergence experiment with defaults applied.
std::vector<Level> study_levels(const RunConfig& config);
std::optional<Level> study_reference(const RunConfig& config);

}  // namespace stochwave
