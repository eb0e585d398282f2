#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "stochwave/mesh.hpp"
#include "stochwave/noise.hpp"
#include "stochwave/operators.hpp"
#include "stochwave/stepper.hpp"

namespace stochwave {

// ---------------------------------------------------------------------------
// Pathwise energy balance
// ---------------------------------------------------------------------------

/// Cumulative energy terms up to step n. With |.| the H norm:
///   v_sq + dv_sum + u_b_sq + du_sum + damping = v0_sq + u0_b_sq + forcing + noise
/// holds exactly for an exact solve of every step.
struct EnergyRow {
  int n = 0;
  double v_sq = 0.0;         // |v^n|^2
  double dv_sum = 0.0;       // sum_{j<=n} |v^j - v^{j-1}|^2
  double u_b_sq = 0.0;       // |u^n|_B^2
  double du_sum = 0.0;       // sum_{j<=n} |u^j - u^{j-1}|_B^2
  double damping = 0.0;      // 2 tau sum <A v^j, v^j>
  double forcing = 0.0;      // 2 tau sum <f^j, v^j>
  double noise = 0.0;        // 2 sum (C(u^{j-1}, v^{j-1}) dW^j, v^j)
  double noise_norm = 0.0;   // tau sum |C^r(u^j, v^j)|^2_{l2(H)}
  double va_integral = 0.0;  // tau sum ||v^j||^2_{V_A}
};

struct EnergyLedger {
  double v0_sq = 0.0;
  double u0_b_sq = 0.0;
  std::vector<EnergyRow> rows;  // n = 0..N
  double defect = 0.0;           // |LHS - RHS| at n = N
  double relative_defect = 0.0;  // defect / max(|LHS|, |RHS|)
  double solver_bound = 0.0;     // sum_j 2 res_j |v^j|, the defect explained by solver residuals

  [[nodiscard]] double balance_lhs(const EnergyRow& row) const;
  [[nodiscard]] double balance_rhs(const EnergyRow& row) const;
  /// Left side of the expected a priori bound: |v^n|^2 + |u^n|_B^2 + sum |u^j - u^{j-1}|_B^2.
  [[nodiscard]] double apriori_lhs(const EnergyRow& row) const;
  /// |v^0|^2 + |u^0|_B^2 + 2 tau sum <f^j - A v^j, v^j> + tau sum |C^r(u^j, v^j)|^2.
  [[nodiscard]] double apriori_rhs(const EnergyRow& row) const;
};

/// Recomputes every energy term from the trajectory and the noise path.
EnergyLedger audit_energy(const Trajectory& traj, const WienerPath& path, const ForcingGrid& forcing,
                          const ProblemSpec& spec, const SchemeParams& params);

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

/// Seed of path i in an ensemble starting at base_seed.
inline std::uint64_t path_seed(std::uint64_t base_seed, int index)
{
  return base_seed + static_cast<std::uint64_t>(index);
}

/// Evaluates fn(0..count-1) on up to `workers` threads and returns the
/// results in index order. Results depend only on the index, never on
/// scheduling. The first exception (by index) is rethrown.
template <class Fn>
auto parallel_map(int count, int workers, Fn&& fn) -> std::vector<decltype(fn(0))>
{
  using Result = decltype(fn(0));
  std::vector<std::optional<Result>> slots(static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        slots[static_cast<std::size_t>(i)].emplace(fn(i));
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const int pool = std::clamp(workers, 1, std::max(1, count));
  if (pool == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (int t = 0; t < pool; ++t) {
      threads.emplace_back(worker);
    }
  }
  std::vector<Result> out;
  out.reserve(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (errors[i]) {
      std::rethrow_exception(errors[i]);
    }
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // sample standard deviation / sqrt(count)
};

/// Sample mean and standard error, summed in index order.
MeanSe mean_se(std::span<const double> samples);

struct PathFailure {
  int path = 0;
  int step = 0;
  std::string message;
};

struct EnsembleRun {
  std::vector<EnergyLedger> ledgers;  // successful paths in index order
  std::vector<int> path_indices;
  std::vector<PathFailure> failures;
};

/// Integrates `paths` independent trajectories (seeds base_seed + i) and
/// audits each one.
EnsembleRun run_ensemble(const ProblemSpec& spec, const SchemeParams& params, int modes, int paths,
                         std::uint64_t base_seed, int workers);

struct EnsembleStats {
  int paths = 0;
  std::uint64_t base_seed = 0;
  std::vector<MeanSe> v_sq;     // E|v^n|^2, n = 0..N
  std::vector<MeanSe> u_b_sq;   // E|u^n|_B^2
  std::vector<MeanSe> lhs;      // E of the a priori left side
  std::vector<MeanSe> rhs;      // E of the a priori right side
  std::vector<MeanSe> margin;   // E[rhs - lhs], with the paired standard error
  MeanSe sup_v_sq;              // sup_n E|v^n|^2 (se at the maximizing n)
  MeanSe sup_u_b_sq;            // sup_n E|u^n|_B^2
  MeanSe va_integral;           // E[tau sum ||v^n||^2_{V_A}]
  MeanSe du_sum;                // E[sum |u^j - u^{j-1}|_B^2]
};

EnsembleStats ensemble_stats(std::span<const EnergyLedger> ledgers, std::uint64_t base_seed = 0);

struct AprioriAudit {
  double band = 4.0;          // accepted standard errors below zero
  int worst_n = 0;
  double worst_margin = 0.0;  // mean margin at worst_n
  double worst_se = 0.0;
  double worst_score = 0.0;   // min_n margin / se (or +inf when se = 0 and margin >= 0)
  bool ok = true;
};

/// Checks E[rhs - lhs] >= -band * se at every n.
AprioriAudit audit_apriori(const EnsembleStats& stats, double band = 4.0);

/// Smallest pathwise margin rhs - lhs over every path and every n.
double min_pathwise_margin(std::span<const EnergyLedger> ledgers);

struct RefinementQuantity {
  std::string name;
  double coarse = 0.0;
  double fine = 0.0;
  double relative_change = 0.0;  // |fine - coarse| / |coarse|
};

struct RefinementAudit {
  double threshold = 0.10;
  std::vector<RefinementQuantity> quantities;
  bool ok = true;
};

/// Compares the monitored a priori quantities between a run and its
/// refinement. Every quantity must change by less than `threshold`.
RefinementAudit audit_refinement(const EnsembleStats& coarse, const EnsembleStats& fine, double threshold = 0.10);

// ---------------------------------------------------------------------------
// Uniqueness
// ---------------------------------------------------------------------------

struct UniquenessOptions {
  double perturbation = 1e3;     // scale of the random offset added to the second twin's guesses
  bool permute_strategies = true;  // second twin runs Picard before Newton
};

struct UniquenessResult {
  double max_dv = 0.0;    // max_n |v_1^n - v_2^n|
  double max_du_b = 0.0;  // max_n |u_1^n - u_2^n|_B
  bool bitwise_equal = false;
};

UniquenessResult uniqueness_experiment(const ProblemSpec& spec, const SchemeParams& params, const WienerPath& path,
                                       const ForcingGrid& forcing, const UniquenessOptions& options = {});

// ---------------------------------------------------------------------------
// Convergence studies
// ---------------------------------------------------------------------------

struct Level {
  int steps = 0;
  int m = 0;
};

/// Builds the discrete problem on a given mesh from one continuous
/// description, so every level shares the same operators, data and forcing.
struct ProblemFamily {
  std::function<ProblemSpec(const Mesh1D&)> build;
  int modes = 1;
  double horizon = 1.0;
  double solver_tol = 1e-10;
  int max_iters = 200;
  bool override_gate = false;
  /// When set, errors are measured against these instead of a reference level.
  std::function<Vector(const Mesh1D&, double)> exact_v;
  std::function<Vector(const Mesh1D&, double)> exact_u;
};

struct LevelErrors {
  Level level;
  MeanSe v_final;     // E|v_l(T) - v_ref(T)|^2
  MeanSe u_final;     // E|u_l(T) - u_ref(T)|_B^2
  MeanSe v_integral;  // E int_0^T ||v_l - v_ref||^2_{V_A} dt
};

struct ConvergenceReport {
  std::vector<LevelErrors> rows;
  std::optional<Level> reference;  // empty when measured against an exact solution
  int modes = 0;
  int paths = 0;
  std::uint64_t base_seed = 0;
  std::vector<PathFailure> failures;

  /// True when the chosen error strictly decreases from row to row.
  [[nodiscard]] bool strictly_decreasing(MeanSe LevelErrors::*field) const;
};

/// Coupled convergence study. For each path the finest Brownian increments
/// are drawn once and summed down to every coarser grid; levels are compared
/// with the reference after nodal prolongation onto the reference mesh. The
/// reference must be a dyadic refinement in time of every level and its mesh
/// must contain every level's mesh.
ConvergenceReport convergence_study(const ProblemFamily& family, const std::vector<Level>& levels,
                                    std::optional<Level> reference, int paths, std::uint64_t base_seed,
                                    int workers);

}  // namespace stochwave
