#include "stochwave/analysis.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace stochwave {

double EnergyLedger::balance_lhs(const EnergyRow& row) const
{
  return row.v_sq + row.dv_sum + row.u_b_sq + row.du_sum + row.damping;
}

double EnergyLedger::balance_rhs(const EnergyRow& row) const
{
  return v0_sq + u0_b_sq + row.forcing + row.noise;
}

double EnergyLedger::apriori_lhs(const EnergyRow& row) const
{
  return row.v_sq + row.u_b_sq + row.du_sum;
}

double EnergyLedger::apriori_rhs(const EnergyRow& row) const
{
  return v0_sq + u0_b_sq + row.forcing - row.damping + row.noise_norm;
}

EnergyLedger audit_energy(const Trajectory& traj, const WienerPath& path, const ForcingGrid& forcing,
                          const ProblemSpec& spec, const SchemeParams& params)
{
  const int steps = traj.steps();
  if (steps != path.steps() || static_cast<int>(forcing.values.size()) != steps) {
    throw std::invalid_argument("audit_energy: trajectory, path and forcing disagree on N");
  }
  const double tau = params.tau();
  const int modes = path.modes();
  const SymTridiagonal& mass = spec.fem.mass;

  EnergyLedger ledger;
  ledger.v0_sq = mass.form(traj.v[0]);
  ledger.u0_b_sq = spec.elastic.norm_sq(traj.u[0]);
  EnergyRow row;
  row.v_sq = ledger.v0_sq;
  row.u_b_sq = ledger.u0_b_sq;
  ledger.rows.push_back(row);

  for (int j = 1; j <= steps; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    const Vector& v = traj.v[idx];
    const Vector& u = traj.u[idx];
    const Vector& v_prev = traj.v[idx - 1];
    const Vector& u_prev = traj.u[idx - 1];
    row.n = j;
    row.v_sq = mass.form(v);
    row.u_b_sq = spec.elastic.norm_sq(u);
    row.dv_sum += mass.form(v - v_prev);
    row.du_sum += spec.elastic.norm_sq(u - u_prev);
    row.damping += 2.0 * tau * spec.damping->apply(v).dot(v);
    row.forcing += 2.0 * tau * forcing.at(j).dot(v);
    row.noise += 2.0 * mass.form(noise_term(spec, path, j, u_prev, v_prev), v);
    row.noise_norm += tau * spec.noise->norm_sq(u, v, modes);
    row.va_integral += tau * spec.va_norm_sq(v);
    ledger.rows.push_back(row);
    if (idx - 1 < traj.stats.size()) {
      ledger.solver_bound += 2.0 * traj.stats[idx - 1].residual * std::sqrt(row.v_sq);
    }
  }
  const double lhs = ledger.balance_lhs(ledger.rows.back());
  const double rhs = ledger.balance_rhs(ledger.rows.back());
  ledger.defect = std::abs(lhs - rhs);
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  ledger.relative_defect = scale > 0.0 ? ledger.defect / scale : 0.0;
  return ledger;
}

MeanSe mean_se(std::span<const double> samples)
{
  if (samples.empty()) {
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  }
  const auto n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double x : samples) {
    sum += x;
  }
  const double mean = sum / n;
  if (samples.size() < 2) {
    return {mean, 0.0};
  }
  double ss = 0.0;
  for (double x : samples) {
    ss += (x - mean) * (x - mean);
  }
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

EnsembleRun run_ensemble(const ProblemSpec& spec, const SchemeParams& params, int modes, int paths,
                         std::uint64_t base_seed, int workers)
{
  if (paths < 1) {
    throw std::invalid_argument("run_ensemble: need at least one path");
  }
  const ForcingGrid forcing = assemble_forcing(spec, params);
  struct Outcome {
    std::optional<EnergyLedger> ledger;
    std::optional<PathFailure> failure;
  };
  auto outcomes = parallel_map(paths, workers, [&](int i) {
    Outcome out;
    const WienerPath path = generate_path(params.steps, modes, params.horizon, path_seed(base_seed, i));
    try {
      const Trajectory traj = integrate(spec, params, path, forcing);
      out.ledger = audit_energy(traj, path, forcing, spec, params);
    } catch (const NonConvergence& e) {
      out.failure = PathFailure{i, e.step(), e.what()};
    }
    return out;
  });
  EnsembleRun run;
  for (int i = 0; i < paths; ++i) {
    auto& o = outcomes[static_cast<std::size_t>(i)];
    if (o.ledger) {
      run.ledgers.push_back(std::move(*o.ledger));
      run.path_indices.push_back(i);
    } else {
      run.failures.push_back(std::move(*o.failure));
    }
  }
  return run;
}

EnsembleStats ensemble_stats(std::span<const EnergyLedger> ledgers, std::uint64_t base_seed)
{
  if (ledgers.empty()) {
    throw std::invalid_argument("ensemble_stats: no paths");
  }
  const std::size_t levels = ledgers.front().rows.size();
  EnsembleStats stats;
  stats.paths = static_cast<int>(ledgers.size());
  stats.base_seed = base_seed;
  std::vector<double> buf(ledgers.size());
  auto collect = [&](auto&& get) {
    for (std::size_t p = 0; p < ledgers.size(); ++p) {
      buf[p] = get(ledgers[p]);
    }
    return mean_se(buf);
  };
  for (std::size_t n = 0; n < levels; ++n) {
    stats.v_sq.push_back(collect([n](const EnergyLedger& l) { return l.rows.at(n).v_sq; }));
    stats.u_b_sq.push_back(collect([n](const EnergyLedger& l) { return l.rows.at(n).u_b_sq; }));
    stats.lhs.push_back(collect([n](const EnergyLedger& l) { return l.apriori_lhs(l.rows.at(n)); }));
    stats.rhs.push_back(collect([n](const EnergyLedger& l) { return l.apriori_rhs(l.rows.at(n)); }));
    stats.margin.push_back(collect([n](const EnergyLedger& l) {
      const auto& row = l.rows.at(n);
      return l.apriori_rhs(row) - l.apriori_lhs(row);
    }));
  }
  stats.sup_v_sq = stats.v_sq.at(1);
  stats.sup_u_b_sq = stats.u_b_sq.at(1);
  for (std::size_t n = 1; n < levels; ++n) {
    if (stats.v_sq[n].mean > stats.sup_v_sq.mean) {
      stats.sup_v_sq = stats.v_sq[n];
    }
    if (stats.u_b_sq[n].mean > stats.sup_u_b_sq.mean) {
      stats.sup_u_b_sq = stats.u_b_sq[n];
    }
  }
  stats.va_integral = collect([](const EnergyLedger& l) { return l.rows.back().va_integral; });
  stats.du_sum = collect([](const EnergyLedger& l) { return l.rows.back().du_sum; });
  return stats;
}

AprioriAudit audit_apriori(const EnsembleStats& stats, double band)
{
  AprioriAudit audit;
  audit.band = band;
  audit.worst_score = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < stats.margin.size(); ++n) {
    const MeanSe& m = stats.margin[n];
    double score;
    if (m.se > 0.0) {
      score = m.mean / m.se;
    } else {
      score = m.mean >= 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    }
    if (score < audit.worst_score || n == 0) {
      audit.worst_score = score;
      audit.worst_n = static_cast<int>(n);
      audit.worst_margin = m.mean;
      audit.worst_se = m.se;
    }
    if (m.mean < -band * m.se || (m.se == 0.0 && m.mean < 0.0)) {
      audit.ok = false;
    }
  }
  return audit;
}

double min_pathwise_margin(std::span<const EnergyLedger> ledgers)
{
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& l : ledgers) {
    for (const auto& row : l.rows) {
      worst = std::min(worst, l.apriori_rhs(row) - l.apriori_lhs(row));
    }
  }
  return worst;
}

RefinementAudit audit_refinement(const EnsembleStats& coarse, const EnsembleStats& fine, double threshold)
{
  RefinementAudit audit;
  audit.threshold = threshold;
  auto add = [&](std::string name, double a, double b) {
    RefinementQuantity q{std::move(name), a, b, 0.0};
    q.relative_change = a != 0.0 ? std::abs(b - a) / std::abs(a) : (b == 0.0 ? 0.0 : 1.0);
    audit.ok = audit.ok && q.relative_change < threshold;
    audit.quantities.push_back(std::move(q));
  };
  add("sup_v_sq", coarse.sup_v_sq.mean, fine.sup_v_sq.mean);
  add("va_integral", coarse.va_integral.mean, fine.va_integral.mean);
  add("du_sum", coarse.du_sum.mean, fine.du_sum.mean);
  return audit;
}

UniquenessResult uniqueness_experiment(const ProblemSpec& spec, const SchemeParams& params, const WienerPath& path,
                                       const ForcingGrid& forcing, const UniquenessOptions& options)
{
  const Trajectory first = integrate(spec, params, path, forcing);

  SchemeParams twin_params = params;
  if (options.permute_strategies) {
    twin_params.strategy = params.strategy == SolverStrategy::NewtonFirst ? SolverStrategy::PicardFirst
                                                                          : SolverStrategy::NewtonFirst;
  }
  GuessPolicy perturbed;
  if (options.perturbation != 0.0) {
    perturbed = [&](int n, const Vector& warm) -> Vector {
      std::mt19937_64 rng(path.seed() ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(n)));
      std::normal_distribution<double> gauss;
      Vector guess = warm;
      for (Eigen::Index k = 0; k < guess.size(); ++k) {
        guess[k] += options.perturbation * gauss(rng);
      }
      return guess;
    };
  }
  const Trajectory second = integrate(spec, twin_params, path, forcing, perturbed);

  UniquenessResult result;
  result.bitwise_equal = true;
  for (std::size_t n = 0; n < first.v.size(); ++n) {
    const Vector dv = first.v[n] - second.v[n];
    const Vector du = first.u[n] - second.u[n];
    result.max_dv = std::max(result.max_dv, std::sqrt(spec.h_norm_sq(dv)));
    result.max_du_b = std::max(result.max_du_b, std::sqrt(spec.elastic.norm_sq(du)));
    result.bitwise_equal = result.bitwise_equal && first.v[n] == second.v[n] && first.u[n] == second.u[n];
  }
  return result;
}

bool ConvergenceReport::strictly_decreasing(MeanSe LevelErrors::*field) const
{
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!((rows[i].*field).mean < (rows[i - 1].*field).mean)) {
      return false;
    }
  }
  return true;
}

namespace {

int dyadic_ratio(int fine, int coarse)
{
  if (coarse < 1 || fine % coarse != 0) {
    return -1;
  }
  const int ratio = fine / coarse;
  return (ratio & (ratio - 1)) == 0 ? ratio : -1;
}

struct LevelSetup {
  Level level;
  std::shared_ptr<const Mesh1D> mesh;
  ProblemSpec spec;
  SchemeParams params;
  ForcingGrid forcing;
};

LevelSetup make_level(const ProblemFamily& family, Level level)
{
  auto mesh = std::make_shared<const Mesh1D>(level.m);
  ProblemSpec spec = family.build(*mesh);
  SchemeParams params = SchemeParams::make(spec, level.steps, family.horizon, family.solver_tol, family.max_iters,
                                           1.0, family.override_gate);
  ForcingGrid forcing = assemble_forcing(spec, params);
  return {level, std::move(mesh), std::move(spec), params, std::move(forcing)};
}

WienerPath coarsen_to(const WienerPath& fine, int steps)
{
  WienerPath path = fine;
  while (path.steps() > steps) {
    path = coarsen_path(path);
  }
  return path;
}

}  // namespace

ConvergenceReport convergence_study(const ProblemFamily& family, const std::vector<Level>& levels,
                                    std::optional<Level> reference, int paths, std::uint64_t base_seed,
                                    int workers)
{
  if (levels.empty() || paths < 1) {
    throw std::invalid_argument("convergence_study: need at least one level and one path");
  }
  const bool exact = static_cast<bool>(family.exact_v) && static_cast<bool>(family.exact_u);
  if (!exact && !reference) {
    throw std::invalid_argument("convergence_study: a reference level is required without an exact solution");
  }
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i].steps > levels[i - 1].steps && levels[i].m > levels[i - 1].m)) {
      throw std::invalid_argument("convergence_study: levels must be strictly refining");
    }
  }
  // every path is drawn on the finest time grid and summed down
  const int finest_steps = exact ? levels.back().steps : reference->steps;
  for (const Level& l : levels) {
    if (dyadic_ratio(finest_steps, l.steps) < 0) {
      throw std::invalid_argument("convergence_study: time grids must be dyadic refinements of each other");
    }
    if (!exact && (reference->m + 1) % (l.m + 1) != 0) {
      throw std::invalid_argument("convergence_study: reference mesh must contain every level's mesh");
    }
  }
  if (!exact && !(reference->steps > levels.back().steps && reference->m > levels.back().m)) {
    throw std::invalid_argument("convergence_study: reference must be finer than every level");
  }

  std::vector<LevelSetup> setups;
  for (const Level& l : levels) {
    setups.push_back(make_level(family, l));
  }
  std::optional<LevelSetup> ref;
  if (!exact) {
    ref = make_level(family, *reference);
  }

  using Errors = std::array<double, 3>;
  struct Outcome {
    std::vector<Errors> errors;
    std::optional<PathFailure> failure;
  };

  auto outcomes = parallel_map(paths, workers, [&](int i) {
    Outcome out;
    const WienerPath finest =
        generate_path(finest_steps, family.modes, family.horizon, path_seed(base_seed, i));
    int failing_step = 0;
    try {
      std::optional<Trajectory> ref_traj;
      if (ref) {
        ref_traj = integrate(ref->spec, ref->params, finest, ref->forcing);
      }
      for (const LevelSetup& s : setups) {
        const WienerPath path = coarsen_to(finest, s.level.steps);
        const Trajectory traj = integrate(s.spec, s.params, path, s.forcing);
        const int steps = s.level.steps;
        Errors e{};
        if (exact) {
          const double tau = s.params.tau();
          const Vector dv = traj.v.back() - family.exact_v(*s.mesh, family.horizon);
          const Vector du = traj.u.back() - family.exact_u(*s.mesh, family.horizon);
          e[0] = s.spec.h_norm_sq(dv);
          e[1] = s.spec.elastic.norm_sq(du);
          for (int n = 1; n <= steps; ++n) {
            e[2] += tau * s.spec.va_norm_sq(traj.v[static_cast<std::size_t>(n)] -
                                            family.exact_v(*s.mesh, s.params.time(n)));
          }
        } else {
          const Mesh1D& fine_mesh = *ref->mesh;
          const int ratio = ref->params.steps / steps;
          std::vector<Vector> lifted;
          lifted.reserve(traj.v.size());
          for (const Vector& v : traj.v) {
            lifted.push_back(prolongate(*s.mesh, fine_mesh, v));
          }
          const Vector u_final = prolongate(*s.mesh, fine_mesh, traj.u.back());
          e[0] = ref->spec.h_norm_sq(lifted.back() - ref_traj->v.back());
          e[1] = ref->spec.elastic.norm_sq(u_final - ref_traj->u.back());
          const double tau_ref = ref->params.tau();
          for (int n = 1; n <= ref->params.steps; ++n) {
            const int coarse_n = (n + ratio - 1) / ratio;
            e[2] += tau_ref * ref->spec.va_norm_sq(lifted[static_cast<std::size_t>(coarse_n)] -
                                                   ref_traj->v[static_cast<std::size_t>(n)]);
          }
        }
        out.errors.push_back(e);
      }
    } catch (const NonConvergence& err) {
      failing_step = err.step();
      out.errors.clear();
      out.failure = PathFailure{i, failing_step, err.what()};
    }
    return out;
  });

  ConvergenceReport report;
  report.reference = exact ? std::nullopt : reference;
  report.modes = family.modes;
  report.paths = paths;
  report.base_seed = base_seed;
  std::vector<std::vector<double>> samples(levels.size() * 3);
  for (auto& o : outcomes) {
    if (o.failure) {
      report.failures.push_back(*o.failure);
      continue;
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
      for (std::size_t k = 0; k < 3; ++k) {
        samples[l * 3 + k].push_back(o.errors[l][k]);
      }
    }
  }
  for (std::size_t l = 0; l < levels.size(); ++l) {
    LevelErrors row;
    row.level = levels[l];
    row.v_final = mean_se(samples[l * 3]);
    row.u_final = mean_se(samples[l * 3 + 1]);
    row.v_integral = mean_se(samples[l * 3 + 2]);
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace stochwave
