#include "stochwave/experiment.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace stochwave {

namespace {

constexpr const char* kVersion = "0.1.0";

using json = nlohmann::ordered_json;

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Comma-separated rows with a fixed header.
class CsvTable {
public:
  explicit CsvTable(std::initializer_list<std::string> header)
  {
    bool first = true;
    for (const auto& h : header) {
      body_ << (first ? "" : ",") << h;
      first = false;
    }
    body_ << "\n";
  }

  CsvTable& cell(double x)
  {
    sep();
    body_ << format_double(x);
    return *this;
  }
  CsvTable& cell(long long x)
  {
    sep();
    body_ << x;
    return *this;
  }
  CsvTable& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvTable& cell(std::uint64_t x)
  {
    sep();
    body_ << x;
    return *this;
  }
  CsvTable& cell(const std::string& s)
  {
    sep();
    body_ << s;
    return *this;
  }
  void end_row()
  {
    body_ << "\n";
    fresh_ = true;
  }
  [[nodiscard]] std::string str() const { return body_.str(); }

private:
  void sep()
  {
    if (!fresh_) {
      body_ << ",";
    }
    fresh_ = false;
  }

  std::ostringstream body_;
  bool fresh_ = true;
};

class Output {
public:
  explicit Output(std::filesystem::path dir) : dir_(std::move(dir))
  {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) {
      throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    }
  }

  void write(const std::string& name, const std::string& content)
  {
    const auto path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    out.close();
    if (!out) {
      throw IoError("cannot write " + path.string());
    }
    files_.push_back(name);
  }

  [[nodiscard]] const std::filesystem::path& dir() const { return dir_; }
  [[nodiscard]] const std::vector<std::string>& files() const { return files_; }

private:
  std::filesystem::path dir_;
  std::vector<std::string> files_;
};

struct Verdict {
  ExitCode code = ExitCode::Ok;
  json audit = json::object();
  std::vector<PathFailure> failures;
  std::string summary;
};

json failure_json(const PathFailure& f, std::uint64_t base_seed)
{
  return {{"kind", "nonconvergence"},
          {"path", f.path},
          {"seed", path_seed(base_seed, f.path)},
          {"step", f.step},
          {"message", f.message}};
}

void append_energy_rows(CsvTable& table, int path, const EnergyLedger& ledger, const SchemeParams& params)
{
  for (const EnergyRow& row : ledger.rows) {
    table.cell(path)
        .cell(row.n)
        .cell(params.time(row.n))
        .cell(row.v_sq)
        .cell(row.dv_sum)
        .cell(row.u_b_sq)
        .cell(row.du_sum)
        .cell(row.damping)
        .cell(row.forcing)
        .cell(row.noise)
        .cell(row.noise_norm)
        .cell(row.va_integral)
        .cell(ledger.balance_lhs(row))
        .cell(ledger.balance_rhs(row));
    table.end_row();
  }
}

CsvTable energy_table()
{
  return CsvTable({"path", "n", "t", "v_sq", "dv_sum", "u_b_sq", "du_sum", "damping", "forcing", "noise",
                   "noise_norm", "va_integral", "lhs", "rhs"});
}

std::string trajectory_csv(const Trajectory& traj, const ProblemSpec& spec, const SchemeParams& params)
{
  CsvTable table({"n", "t", "v_h", "u_b", "newton_iters", "picard_iters", "residual"});
  for (int n = 0; n <= traj.steps(); ++n) {
    const auto idx = static_cast<std::size_t>(n);
    table.cell(n)
        .cell(params.time(n))
        .cell(std::sqrt(spec.h_norm_sq(traj.v[idx])))
        .cell(std::sqrt(spec.elastic.norm_sq(traj.u[idx])));
    if (n == 0) {
      table.cell(0).cell(0).cell(0.0);
    } else {
      const SolveStats& s = traj.stats[idx - 1];
      table.cell(s.newton_iters).cell(s.picard_iters).cell(s.residual);
    }
    table.end_row();
  }
  return table.str();
}

void write_trajectories(Output& out, const RunConfig& config, const ProblemSpec& spec, const SchemeParams& params,
                        const ForcingGrid& forcing, const std::vector<int>& paths)
{
  for (int i : paths) {
    const WienerPath path = generate_path(params.steps, config.discretization.modes, params.horizon,
                                          path_seed(config.experiment.base_seed, i));
    const Trajectory traj = integrate(spec, params, path, forcing);
    out.write("trajectory_" + std::to_string(i) + ".csv", trajectory_csv(traj, spec, params));
  }
}

Verdict energy_experiment(const RunConfig& config, const RunOptions& options, Output& out, bool single)
{
  const ProblemSpec spec = build_problem(config);
  const SchemeParams params = scheme_params(config, spec);
  const int paths = single ? 1 : config.experiment.paths;
  const EnsembleRun run =
      run_ensemble(spec, params, config.discretization.modes, paths, config.experiment.base_seed, options.workers);

  CsvTable table = energy_table();
  double max_defect = 0.0;
  double max_relative = 0.0;
  int worst = -1;
  int over = 0;
  for (std::size_t k = 0; k < run.ledgers.size(); ++k) {
    const EnergyLedger& l = run.ledgers[k];
    append_energy_rows(table, run.path_indices[k], l, params);
    max_defect = std::max(max_defect, l.defect);
    if (worst < 0 || l.relative_defect > max_relative) {
      max_relative = l.relative_defect;
      worst = run.path_indices[k];
    }
    over += l.relative_defect > config.experiment.defect_tolerance ? 1 : 0;
  }
  out.write("energy.csv", table.str());
  if (config.output.trajectories) {
    write_trajectories(out, config, spec, params, assemble_forcing(spec, params), run.path_indices);
  }

  Verdict v;
  v.failures = run.failures;
  v.audit = {{"check", "energy_identity"},
             {"tolerance", config.experiment.defect_tolerance},
             {"max_defect", max_defect},
             {"max_relative_defect", max_relative},
             {"worst_path", worst},
             {"paths_over_tolerance", over},
             {"ok", over == 0}};
  if (!single && over > 0) {
    v.code = ExitCode::AuditFailure;
  }
  v.summary = "max relative energy defect " + format_double(max_relative) + " over " +
              std::to_string(run.ledgers.size()) + " path(s)";
  return v;
}

Verdict apriori_experiment(const RunConfig& config, const RunOptions& options, Output& out)
{
  const ProblemSpec spec = build_problem(config);
  const SchemeParams params = scheme_params(config, spec);
  const EnsembleRun run = run_ensemble(spec, params, config.discretization.modes, config.experiment.paths,
                                       config.experiment.base_seed, options.workers);
  Verdict v;
  v.failures = run.failures;
  if (run.ledgers.empty()) {
    v.summary = "no path completed";
    return v;
  }
  const EnsembleStats stats = ensemble_stats(run.ledgers, config.experiment.base_seed);
  const AprioriAudit audit = audit_apriori(stats, config.experiment.band);

  CsvTable table({"n", "t", "lhs_mean", "lhs_se", "rhs_mean", "rhs_se", "margin_mean", "margin_se", "v_sq_mean",
                  "v_sq_se", "u_b_sq_mean", "u_b_sq_se"});
  for (std::size_t n = 0; n < stats.margin.size(); ++n) {
    table.cell(static_cast<int>(n))
        .cell(params.time(static_cast<int>(n)))
        .cell(stats.lhs[n].mean)
        .cell(stats.lhs[n].se)
        .cell(stats.rhs[n].mean)
        .cell(stats.rhs[n].se)
        .cell(stats.margin[n].mean)
        .cell(stats.margin[n].se)
        .cell(stats.v_sq[n].mean)
        .cell(stats.v_sq[n].se)
        .cell(stats.u_b_sq[n].mean)
        .cell(stats.u_b_sq[n].se);
    table.end_row();
  }
  out.write("apriori.csv", table.str());
  if (config.output.trajectories) {
    write_trajectories(out, config, spec, params, assemble_forcing(spec, params), run.path_indices);
  }

  v.audit = {{"check", "apriori_margin"},
             {"band", audit.band},
             {"worst_n", audit.worst_n},
             {"worst_margin", audit.worst_margin},
             {"worst_se", audit.worst_se},
             {"min_pathwise_margin", min_pathwise_margin(run.ledgers)},
             {"sup_v_sq", stats.sup_v_sq.mean},
             {"sup_u_b_sq", stats.sup_u_b_sq.mean},
             {"va_integral", stats.va_integral.mean},
             {"du_sum", stats.du_sum.mean},
             {"ok", audit.ok}};
  if (!audit.ok) {
    v.code = ExitCode::AuditFailure;
  }
  v.summary = "worst a priori margin " + format_double(audit.worst_margin) + " (se " + format_double(audit.worst_se) +
              ") at n = " + std::to_string(audit.worst_n);
  return v;
}

Verdict uniqueness_run(const RunConfig& config, const RunOptions& options, Output& out)
{
  const ProblemSpec spec = build_problem(config);
  const SchemeParams params = scheme_params(config, spec);
  const ForcingGrid forcing = assemble_forcing(spec, params);
  UniquenessOptions opts;
  opts.perturbation = config.experiment.perturbation;
  struct Outcome {
    std::optional<UniquenessResult> result;
    std::optional<PathFailure> failure;
  };
  const auto outcomes = parallel_map(config.experiment.paths, options.workers, [&](int i) {
    Outcome o;
    const WienerPath path = generate_path(params.steps, config.discretization.modes, params.horizon,
                                          path_seed(config.experiment.base_seed, i));
    try {
      o.result = uniqueness_experiment(spec, params, path, forcing, opts);
    } catch (const NonConvergence& e) {
      o.failure = PathFailure{i, e.step(), e.what()};
    }
    return o;
  });

  CsvTable table({"path", "seed", "max_dv", "max_du_b", "bitwise_equal"});
  Verdict v;
  const double bound = 10.0 * config.solver.tol;
  double worst_dv = 0.0;
  double worst_du = 0.0;
  for (int i = 0; i < config.experiment.paths; ++i) {
    const Outcome& o = outcomes[static_cast<std::size_t>(i)];
    if (o.failure) {
      v.failures.push_back(*o.failure);
      continue;
    }
    table.cell(i)
        .cell(path_seed(config.experiment.base_seed, i))
        .cell(o.result->max_dv)
        .cell(o.result->max_du_b)
        .cell(o.result->bitwise_equal ? 1 : 0);
    table.end_row();
    worst_dv = std::max(worst_dv, o.result->max_dv);
    worst_du = std::max(worst_du, o.result->max_du_b);
  }
  out.write("uniqueness.csv", table.str());
  const bool ok = worst_dv <= bound;
  v.audit = {{"check", "uniqueness"},
             {"bound", bound},
             {"max_dv", worst_dv},
             {"max_du_b", worst_du},
             {"ok", ok}};
  if (!ok) {
    v.code = ExitCode::AuditFailure;
  }
  v.summary = "max twin velocity difference " + format_double(worst_dv) + " (bound " + format_double(bound) + ")";
  return v;
}

Verdict convergence_run(const RunConfig& config, const RunOptions& options, Output& out)
{
  const ProblemFamily family = build_family(config);
  const auto levels = study_levels(config);
  const auto reference = study_reference(config);
  const ConvergenceReport report = convergence_study(family, levels, reference, config.experiment.paths,
                                                     config.experiment.base_seed, options.workers);

  CsvTable table({"level", "N", "m", "r", "paths", "v_final_mean", "v_final_se", "v_final_ci_low",
                  "v_final_ci_high", "u_final_mean", "u_final_se", "u_final_ci_low", "u_final_ci_high",
                  "v_integral_mean", "v_integral_se", "v_integral_ci_low", "v_integral_ci_high"});
  const int completed = config.experiment.paths - static_cast<int>(report.failures.size());
  for (std::size_t l = 0; l < report.rows.size(); ++l) {
    const LevelErrors& row = report.rows[l];
    table.cell(static_cast<int>(l)).cell(row.level.steps).cell(row.level.m).cell(report.modes).cell(completed);
    for (const MeanSe& q : {row.v_final, row.u_final, row.v_integral}) {
      table.cell(q.mean).cell(q.se).cell(q.mean - 1.96 * q.se).cell(q.mean + 1.96 * q.se);
    }
    table.end_row();
  }
  out.write("convergence.csv", table.str());

  const bool v_dec = report.strictly_decreasing(&LevelErrors::v_final);
  const bool u_dec = report.strictly_decreasing(&LevelErrors::u_final);
  const bool int_dec = report.strictly_decreasing(&LevelErrors::v_integral);
  const bool linear = config.problem.damping == "linear";
  const bool ok = v_dec && u_dec && (!linear || int_dec);
  Verdict v;
  v.failures = report.failures;
  v.audit = {{"check", "convergence"},
             {"reference", reference ? json{{"N", reference->steps}, {"m", reference->m}} : json("exact")},
             {"v_final_decreasing", v_dec},
             {"u_final_decreasing", u_dec},
             {"v_integral_decreasing", int_dec},
             {"ok", ok}};
  if (!ok) {
    v.code = ExitCode::AuditFailure;
  }
  v.summary = std::to_string(report.rows.size()) + " level(s); errors " + (ok ? "" : "not ") + "decreasing";
  return v;
}

Verdict assumptions_run(const RunConfig& config, Output& out)
{
  const ProblemSpec spec = build_problem(config);
  const AuditReport report = check_assumptions(spec, config.experiment.samples, config.experiment.base_seed);
  CsvTable table({"name", "samples", "violations", "worst_margin"});
  json entries = json::array();
  for (const InequalityAudit& e : report.entries) {
    table.cell(e.name)
        .cell(static_cast<long long>(e.samples))
        .cell(static_cast<long long>(e.violations))
        .cell(e.worst_margin);
    table.end_row();
    json entry = {{"name", e.name}, {"violations", e.violations}, {"worst_margin", e.worst_margin}};
    if (e.witness) {
      json witness = json::array();
      for (const Vector& w : *e.witness) {
        witness.push_back(std::vector<double>(w.data(), w.data() + w.size()));
      }
      entry["witness"] = witness;
    }
    entries.push_back(entry);
  }
  out.write("assumptions.csv", table.str());
  Verdict v;
  v.audit = {{"check", "assumptions"}, {"entries", entries}, {"ok", report.ok()}};
  if (!report.ok()) {
    v.code = ExitCode::AuditFailure;
  }
  std::int64_t violations = 0;
  for (const auto& e : report.entries) {
    violations += e.violations;
  }
  v.summary = std::to_string(violations) + " violation(s) over " + std::to_string(report.entries.size()) +
              " inequalities";
  return v;
}

std::string utc_now()
{
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const char* status_name(ExitCode code)
{
  switch (code) {
    case ExitCode::Ok:
      return "ok";
    case ExitCode::Usage:
      return "usage_error";
    case ExitCode::AuditFailure:
      return "audit_failure";
    case ExitCode::NonConvergence:
      return "nonconvergence";
    case ExitCode::Io:
      return "io_error";
  }
  return "unknown";
}

}  // namespace

std::string format_double(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

RunResult run_experiment(const RunConfig& config, const RunOptions& options)
{
  RunResult result;
  result.directory = config.output.directory;
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    Output out(config.output.directory);
    out.write("config.yaml", to_yaml(config));

    Verdict verdict;
    const std::string& kind = config.experiment.kind;
    try {
      if (kind == "single" || kind == "energy") {
        verdict = energy_experiment(config, options, out, kind == "single");
      } else if (kind == "apriori") {
        verdict = apriori_experiment(config, options, out);
      } else if (kind == "uniqueness") {
        verdict = uniqueness_run(config, options, out);
      } else if (kind == "convergence") {
        verdict = convergence_run(config, options, out);
      } else {
        verdict = assumptions_run(config, out);
      }
    } catch (const NonConvergence& e) {
      verdict.failures.push_back(PathFailure{0, e.step(), e.what()});
    }
    if (!verdict.failures.empty()) {
      verdict.code = ExitCode::NonConvergence;
      verdict.summary = std::to_string(verdict.failures.size()) + " path(s) failed to converge; first at step " +
                        std::to_string(verdict.failures.front().step);
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json manifest;
    manifest["tool"] = "stochwave";
    manifest["version"] = kVersion;
    manifest["status"] = status_name(verdict.code);
    manifest["exit_code"] = static_cast<int>(verdict.code);
    manifest["experiment"] = kind;
    manifest["config"] = to_yaml(config);
    manifest["derived"] = {{"lambda", config.derived.lambda},
                           {"lambda_a", config.derived.lambda_a},
                           {"lambda_b", config.derived.lambda_b},
                           {"kappa", config.derived.kappa},
                           {"mu_a", config.derived.mu_a},
                           {"mu_b", config.derived.mu_b},
                           {"lambda_tau", config.derived.lambda_tau}};
    manifest["seeds"] = {{"base_seed", config.experiment.base_seed},
                         {"paths", kind == "single" ? 1 : config.experiment.paths},
                         {"rule", "path i uses seed base_seed + i"}};
    manifest["versions"] = {{"stochwave", kVersion},
                            {"compiler", __VERSION__},
                            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                          "." + std::to_string(EIGEN_MINOR_VERSION)},
                            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    manifest["timing"] = {{"started_utc", started}, {"elapsed_seconds", elapsed}, {"workers", options.workers}};
    manifest["audit"] = verdict.audit;
    json failures = json::array();
    for (const auto& f : verdict.failures) {
      failures.push_back(failure_json(f, config.experiment.base_seed));
    }
    manifest["failure"] = verdict.failures.empty() ? json(nullptr) : failures.front();
    manifest["failures"] = failures;
    json files = out.files();
    files.push_back("manifest.json");
    manifest["outputs"] = files;
    out.write("manifest.json", manifest.dump(2) + "\n");

    result.code = verdict.code;
    result.summary = verdict.summary;
    result.files = out.files();
  } catch (const IoError& e) {
    result.code = ExitCode::Io;
    result.summary = e.what();
  }
  result.status = status_name(result.code);
  return result;
}

}  // namespace stochwave
