#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stochwave/config.hpp"

namespace stochwave {

/// Process exit codes of the experiment runner.
enum class ExitCode : int {
  Ok = 0,
  Usage = 1,           // bad command line or config
  AuditFailure = 2,    // an audited inequality or identity failed
  NonConvergence = 3,  // a nonlinear step solve failed on some path
  Io = 4,              // output could not be written
};

struct RunOptions {
  int workers = 1;  // never changes any output
};

struct RunResult {
  ExitCode code = ExitCode::Ok;
  std::string status;  // ok | audit_failure | nonconvergence | io_error
  std::string summary;
  std::filesystem::path directory;
  std::vector<std::string> files;  // written artifacts, manifest last
};

/// Runs the configured experiment and writes its artifacts into
/// config.output.directory:
///
///   manifest.json      config echo, seeds, versions, timing, status, failure record
///   config.yaml        config echo (re-parses to the same config)
///   energy.csv         single | energy: one row per (path, n)
///                      path,n,t,v_sq,dv_sum,u_b_sq,du_sum,damping,forcing,noise,noise_norm,va_integral,lhs,rhs
///   apriori.csv        apriori: one row per n
///                      n,t,lhs_mean,lhs_se,rhs_mean,rhs_se,margin_mean,margin_se,v_sq_mean,v_sq_se,u_b_sq_mean,u_b_sq_se
///   uniqueness.csv     uniqueness: path,seed,max_dv,max_du_b,bitwise_equal
///   convergence.csv    convergence: one row per level
///                      level,N,m,r,paths,<q>_mean,<q>_se,<q>_ci_low,<q>_ci_high for q in v_final,u_final,v_integral
///   assumptions.csv    assumptions: name,samples,violations,worst_margin
///   trajectory_<i>.csv opt-in: n,t,v_h,u_b,newton_iters,picard_iters,residual
///
/// Floats are written with 17 significant digits; CSV bodies depend only on
/// the config. Confidence intervals are mean +- 1.96 se.
RunResult run_experiment(const RunConfig& config, const RunOptions& options = {});

/// Formats a double with 17 significant digits.
std::string format_double(double x);

}  // namespace stochwave
