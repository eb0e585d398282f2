// One PASS/FAIL line per acceptance criterion. `acceptance --criterion k` runs
// a single one; without arguments all ten run. Exit status is nonzero if any
// selected criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "stochwave/analysis.hpp"
#include "stochwave/config.hpp"
#include "stochwave/prolongation.hpp"

using namespace stochwave;

namespace {

// Pinned tolerances.
constexpr double kStrictTol = 1e-10;        // solver tolerance for criterion 1
constexpr double kEnsembleTol = 1e-9;       // solver tolerance for the other Monte Carlo runs
constexpr double kStudyTol = 1e-8;          // criterion 8; rounding floor of the m = 127 reference is ~2.4e-9
constexpr double kEnergyDefect = 1e-8;      // relative energy defect, criterion 1
constexpr double kScalarTol = 1e-14;        // criterion 2
constexpr double kBand = 4.0;               // standard errors, criteria 3 and 10
constexpr double kRefinementChange = 0.10;  // criterion 4
constexpr double kUniquenessFactor = 10.0;  // criterion 5, times the solver tolerance
constexpr double kSteklovDefect = 1e-12;    // criterion 6
constexpr double kExactRatio = 4.0;         // criterion 7, first over last H-error

struct Outcome {
  bool pass = false;
  std::string details;
};

std::string fmt(const char* format, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

int workers()
{
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

const std::string kNoisyProblem = R"(
problem:
  damping: rho
  noise: {kind: spectral, alpha: 0.5, beta: 0.5, gamma: 1.0, s: 1.0}
  u0: {kind: sine, amplitude: 1.0, mode: 1}
  v0: {kind: sine, amplitude: 1.0, mode: 2}
)";

struct Setup {
  RunConfig config;
  ProblemSpec spec;
  SchemeParams params;
};

Setup setup(const std::string& text)
{
  RunConfig c = parse_and_validate(text);
  ProblemSpec spec = build_problem(c);
  SchemeParams params = scheme_params(c, spec);
  return {std::move(c), std::move(spec), params};
}

double max_relative_defect(const EnsembleRun& run)
{
  double worst = 0.0;
  for (const auto& l : run.ledgers) {
    worst = std::max(worst, l.relative_defect);
  }
  return worst;
}

Outcome energy_identity()
{
  const Setup s = setup(kNoisyProblem + "discretization: {N: 128, m: 63, r: 8, T: 1.0}\n" +
                        fmt("solver: {tol: %.17g}\n", kStrictTol));
  const EnsembleRun run = run_ensemble(s.spec, s.params, 8, 100, 1, workers());
  const double worst = max_relative_defect(run);
  const bool pass = run.failures.empty() && worst <= kEnergyDefect;
  return {pass, fmt("100 paths, %zu solver failures, max relative defect %.3e (limit %.0e)", run.failures.size(),
                    worst, kEnergyDefect)};
}

Outcome scalar_surrogate()
{
  const Setup s = setup("problem: {model: scalar, damping: linear}\ndiscretization: {N: 1, r: 1, T: 0.5}\n");
  const WienerPath path = generate_path(1, 1, 0.5, 1);
  const ForcingGrid forcing = assemble_forcing(s.spec, s.params);
  const Trajectory traj = integrate(s.spec, s.params, path, forcing);
  const EnergyLedger ledger = audit_energy(traj, path, forcing, s.spec, s.params);
  const EnergyRow& row = ledger.rows.back();
  // hand solution of (v - 1)/tau + v + tau v = 0, tau = 1/2: v = 4/7, u = 2/7
  const double v = traj.v[1][0];
  const double terms[] = {row.v_sq, row.dv_sum, row.u_b_sq, row.du_sum, row.damping};
  const double expected[] = {16.0 / 49.0, 9.0 / 49.0, 4.0 / 49.0, 4.0 / 49.0, 16.0 / 49.0};
  double term_err = 0.0;
  double total = 0.0;
  for (int i = 0; i < 5; ++i) {
    term_err = std::max(term_err, std::abs(terms[i] - expected[i]));
    total += terms[i];
  }
  const bool pass = std::abs(v - 4.0 / 7.0) <= kScalarTol && std::abs(traj.u[1][0] - 2.0 / 7.0) <= kScalarTol &&
                    term_err <= kScalarTol && std::abs(total - 1.0) <= kScalarTol;
  return {pass, fmt("v1 = %.17g, worst term error %.1e, energy sum - 1 = %.1e", v, term_err, total - 1.0)};
}

Outcome apriori_estimate()
{
  const std::string grid = "discretization: {N: 64, m: 31, r: 4, T: 1.0}\n" + fmt("solver: {tol: %.17g}\n", kEnsembleTol);
  const Setup s = setup(kNoisyProblem + grid);
  const EnsembleRun run = run_ensemble(s.spec, s.params, 4, 1000, 1, workers());
  const AprioriAudit audit = audit_apriori(ensemble_stats(run.ledgers, 1), kBand);

  const Setup quiet = setup("problem:\n  damping: rho\n  u0: {kind: sine}\n  v0: {kind: sine, mode: 2}\n" + grid);
  const EnsembleRun det = run_ensemble(quiet.spec, quiet.params, 4, 4, 1, workers());
  const double pathwise = min_pathwise_margin(det.ledgers);

  const bool pass = run.failures.empty() && det.failures.empty() && audit.ok && pathwise >= 0.0;
  return {pass, fmt("1000 paths, %zu failures, worst margin %.4e at n = %d (%.2f SE, band %.0f); zero-noise "
                    "pathwise margin %.4e",
                    run.failures.size() + det.failures.size(), audit.worst_margin, audit.worst_n, audit.worst_score,
                    kBand, pathwise)};
}

Outcome refinement_stability()
{
  const Setup coarse = setup(kNoisyProblem + "discretization: {N: 64, m: 31, r: 4, T: 1.0}\n" +
                             fmt("solver: {tol: %.17g}\n", kEnsembleTol));
  const Setup fine = setup(kNoisyProblem + "discretization: {N: 128, m: 63, r: 4, T: 1.0}\n" +
                           fmt("solver: {tol: %.17g}\n", kEnsembleTol));
  const int paths = 400;
  // coupled: the fine path is a Brownian-bridge refinement of the coarse one
  const auto pairs = parallel_map(paths, workers(), [&](int i) {
    const WienerPath wc = generate_path(64, 4, 1.0, path_seed(1, i));
    const WienerPath wf = refine_path(wc);
    const ForcingGrid fc = assemble_forcing(coarse.spec, coarse.params);
    const ForcingGrid ff = assemble_forcing(fine.spec, fine.params);
    return std::pair{audit_energy(integrate(coarse.spec, coarse.params, wc, fc), wc, fc, coarse.spec, coarse.params),
                     audit_energy(integrate(fine.spec, fine.params, wf, ff), wf, ff, fine.spec, fine.params)};
  });
  std::vector<EnergyLedger> lc;
  std::vector<EnergyLedger> lf;
  for (auto& [a, b] : pairs) {
    lc.push_back(a);
    lf.push_back(b);
  }
  const RefinementAudit audit =
      audit_refinement(ensemble_stats(lc, 1), ensemble_stats(lf, 1), kRefinementChange);
  std::string details = fmt("%d coupled paths (64, 31) -> (128, 63):", paths);
  for (const auto& q : audit.quantities) {
    details += fmt(" %s %.4g -> %.4g (%.1f%%)", q.name.c_str(), q.coarse, q.fine, 100.0 * q.relative_change);
  }
  return {audit.ok, details};
}

Outcome uniqueness()
{
  const Setup s = setup(kNoisyProblem + "discretization: {N: 64, m: 31, r: 4, T: 1.0}\n" +
                        fmt("solver: {tol: %.17g}\n", kEnsembleTol));
  const ForcingGrid forcing = assemble_forcing(s.spec, s.params);
  const auto results = parallel_map(100, workers(), [&](int i) {
    return uniqueness_experiment(s.spec, s.params, generate_path(64, 4, 1.0, path_seed(1, i)), forcing);
  });
  double dv = 0.0;
  double du = 0.0;
  for (const auto& r : results) {
    dv = std::max(dv, r.max_dv);
    du = std::max(du, r.max_du_b);
  }
  const double bound = kUniquenessFactor * kEnsembleTol;
  return {dv <= bound, fmt("100 twin pairs, max |dv| = %.3e, max |du|_B = %.3e (bound %.0e)", dv, du, bound)};
}

Outcome steklov_identity()
{
  const Mesh1D mesh(7);
  const FemMatrices fem = mesh.matrices();
  const Pairing mass = [&](const Vector& a, const Vector& b) { return inner_h(fem, a, b); };
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;
  double worst = 0.0;
  double oracle_gap = 0.0;
  int pairs = 0;
  for (int steps : {1, 2, 8, 64}) {
    for (int trial = 0; trial < 250; ++trial, ++pairs) {
      std::vector<Vector> y(static_cast<std::size_t>(steps) + 1);
      std::vector<Vector> x(static_cast<std::size_t>(steps) + 1);
      for (auto& v : y) {
        v = Vector::NullaryExpr(7, [&] { return g(rng); });
      }
      for (auto& v : x) {
        v = Vector::NullaryExpr(7, [&] { return g(rng); });
      }
      const SteklovCheck check = verify_steklov_identity(right_prolongation(y, 1.0), x, mass);
      const double scale = std::max({std::abs(check.lhs), std::abs(check.rhs), 1e-300});
      worst = std::max(worst, check.defect / scale);
      double direct = 0.0;
      for (int n = 2; n <= steps; ++n) {
        direct += mass(y[static_cast<std::size_t>(n)], x[static_cast<std::size_t>(n - 1)]) / steps;
      }
      oracle_gap = std::max(oracle_gap, std::abs(direct - check.rhs) / std::max(std::abs(direct), 1.0));
    }
  }
  const bool pass = worst <= kSteklovDefect && oracle_gap <= kSteklovDefect;
  return {pass, fmt("%d random pairs over N in {1, 2, 8, 64}, max relative defect %.2e, cell-sum gap %.2e", pairs,
                    worst, oracle_gap)};
}

Outcome exact_solution()
{
  const RunConfig c = parse_and_validate(fmt(R"(
problem:
  damping: linear
  u0: {kind: exact}
  v0: {kind: exact}
  forcing: {kind: manufactured}
solver: {tol: %.17g}
experiment: {kind: convergence, paths: 1, levels: [[16, 15], [32, 31], [64, 63], [128, 127]]}
)",
                                             kStrictTol));
  const ConvergenceReport report =
      convergence_study(build_family(c), study_levels(c), study_reference(c), 1, 1, workers());
  const double ratio = std::sqrt(report.rows.front().v_final.mean / report.rows.back().v_final.mean);
  const bool monotone = report.strictly_decreasing(&LevelErrors::v_final) &&
                        report.strictly_decreasing(&LevelErrors::u_final) &&
                        report.strictly_decreasing(&LevelErrors::v_integral);
  std::string details = "squared v(T) errors:";
  for (const auto& row : report.rows) {
    details += fmt(" %.4e", row.v_final.mean);
  }
  details += fmt("; H-error ratio N=16/N=128 %.2f (need >= %.0f), monotone %s", ratio, kExactRatio,
                 monotone ? "yes" : "no");
  return {report.failures.empty() && monotone && ratio >= kExactRatio, details};
}

Outcome self_convergence()
{
  bool pass = true;
  std::string details;
  for (const char* damping : {"rho", "linear"}) {
    const RunConfig c = parse_and_validate(fmt(R"(
problem:
  damping: %s
  noise: {kind: spectral, alpha: 0.5, beta: 0.5, gamma: 1.0, s: 1.0}
  u0: {kind: sine}
  v0: {kind: sine, mode: 2}
discretization: {r: 8}
solver: {tol: %.17g}
experiment: {kind: convergence, paths: 256, levels: [[16, 15], [32, 31], [64, 63]], reference: [128, 127]}
)",
                                               damping, kStudyTol));
    const ConvergenceReport report =
        convergence_study(build_family(c), study_levels(c), study_reference(c), 256, 1, workers());
    bool ok = report.failures.empty() && report.strictly_decreasing(&LevelErrors::v_final) &&
              report.strictly_decreasing(&LevelErrors::u_final);
    if (std::string(damping) == "linear") {
      ok = ok && report.strictly_decreasing(&LevelErrors::v_integral);
    }
    pass = pass && ok;
    details += fmt("%s%s: %zu failures, v(T)", details.empty() ? "" : "; ", damping, report.failures.size());
    for (const auto& row : report.rows) {
      details += fmt(" %.3e", row.v_final.mean);
    }
    details += ", u(T)";
    for (const auto& row : report.rows) {
      details += fmt(" %.3e", row.u_final.mean);
    }
    details += ", int v";
    for (const auto& row : report.rows) {
      details += fmt(" %.3e", row.v_integral.mean);
    }
  }
  return {pass, details};
}

Outcome structural_assumptions()
{
  const Mesh1D mesh(15);
  const SpectralNoise::Parameters p{0.5, 0.5, 1.0, 1.0};
  auto spec_with = [&](std::shared_ptr<const DampingOperator> d, std::shared_ptr<const NoiseOperator> n) {
    return make_problem(mesh.matrices(), std::make_shared<const Mesh1D>(mesh), std::move(d),
                        ElasticOperator(mesh.stiffness(), 1.0), std::move(n), Forcing::zero(15), Vector::Zero(15),
                        Vector::Zero(15));
  };
  const std::vector<ProblemSpec> shipped{
      spec_with(std::make_shared<RhoDamping>(mesh), std::make_shared<SpectralNoise>(mesh, p, 1.0)),
      spec_with(std::make_shared<LinearDamping>(LinearDamping::laplacian(mesh, 1.0)),
                std::make_shared<SpectralNoise>(mesh, p, 1.0)),
      spec_with(std::make_shared<RhoDamping>(mesh), std::make_shared<ZeroNoise>(mesh.mass(), 15)),
  };
  std::int64_t violations = 0;
  for (const auto& spec : shipped) {
    for (const auto& e : check_assumptions(spec, 10000, 9).entries) {
      violations += e.violations;
    }
  }
  // large beta with the monotonicity shift removed
  ProblemSpec broken = spec_with(std::make_shared<RhoDamping>(mesh),
                                 std::make_shared<SpectralNoise>(mesh, SpectralNoise::Parameters{0.0, 5.0, 0.0, 1.0}, 1.0));
  broken.constants.lambda_a = 0.0;
  const AuditReport report = check_assumptions(broken, 10000, 9);
  const InequalityAudit& mono = report.at("monotonicity_like");
  const bool witness = !report.ok() && mono.violations > 0 && mono.witness.has_value();
  return {violations == 0 && witness,
          fmt("shipped instances: %lld violations in 3 x 10000 samples; broken instance: %lld violations, "
              "witness %s, worst relative margin %.3e",
              static_cast<long long>(violations), static_cast<long long>(mono.violations),
              mono.witness ? "found" : "missing", mono.worst_margin)};
}

Outcome noise_increments()
{
  int nonzero_first = 0;
  for (int i = 0; i < 1000; ++i) {
    const WienerPath p = generate_path(8, 16, 1.0, path_seed(1, i));
    for (double x : p.increment(1)) {
      nonzero_first += x != 0.0;
    }
  }
  const WienerPath big = generate_path(1001, 100, 1.0, 10);
  double sum_sq = 0.0;
  double sum_4 = 0.0;
  double count = 0.0;
  for (int n = 2; n <= big.steps(); ++n) {
    for (double x : big.brownian(n)) {
      sum_sq += x * x;
      sum_4 += x * x * x * x;
      count += 1.0;
    }
  }
  const double var = sum_sq / count;
  const double se = std::sqrt((sum_4 / count - var * var) / count);
  const double score = (var - big.tau()) / se;

  int inexact = 0;
  for (int i = 0; i < 100; ++i) {
    const WienerPath coarse = generate_path(64, 8, 1.0, path_seed(1, i));
    const WienerPath fine = refine_path(coarse);
    for (int n = 1; n <= 64; ++n) {
      for (std::size_t j = 0; j < 8; ++j) {
        inexact += fine.brownian(2 * n - 1)[j] + fine.brownian(2 * n)[j] != coarse.brownian(n)[j];
      }
    }
  }
  const bool pass = nonzero_first == 0 && std::abs(score) <= kBand && inexact == 0;
  return {pass, fmt("first increments nonzero %d/16000; variance %.6e vs tau %.6e over %.0f draws (%.2f SE); "
                    "inexact refinement sums %d/51200",
                    nonzero_first, var, big.tau(), count, score, inexact)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {"energy identity", energy_identity},
      {"scalar surrogate", scalar_surrogate},
      {"a priori estimate", apriori_estimate},
      {"refinement stability", refinement_stability},
      {"uniqueness", uniqueness},
      {"Steklov identity", steklov_identity},
      {"exact solution", exact_solution},
      {"self convergence", self_convergence},
      {"structural assumptions", structural_assumptions},
      {"noise increments", noise_increments},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only != 0 && static_cast<std::size_t>(only) != k + 1) {
      continue;
    }
    Outcome out;
    try {
      out = criteria[k].run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    failed += !out.pass;
    std::printf("criterion %zu [%s] %s: %s\n", k + 1, criteria[k].name, out.pass ? "PASS" : "FAIL",
                out.details.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
