#include "stochwave/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

namespace stochwave {

ConfigError::ConfigError(const std::string& message, int line, int column)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                                        message
                                  : message),
      line_(line),
      column_(column)
{
}

namespace {

[[noreturn]] void fail_at(const YAML::Node& node, const std::string& message)
{
  const YAML::Mark mark = node.Mark();
  if (mark.is_null()) {
    throw ConfigError(message);
  }
  throw ConfigError(message, mark.line + 1, mark.column + 1);
}

std::string join(const std::string& prefix, const std::string& key)
{
  return prefix.empty() ? key : prefix + "." + key;
}

/// Strict view of one mapping node.
class Section {
public:
  Section(YAML::Node node, std::string path, std::set<std::string> allowed)
      : node_(std::move(node)), path_(std::move(path))
  {
    if (!node_ || node_.IsNull()) {
      return;
    }
    if (!node_.IsMap()) {
      fail_at(node_, "'" + (path_.empty() ? std::string("document") : path_) + "' must be a mapping");
    }
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.contains(key)) {
        fail_at(kv.first, "unknown key '" + join(path_, key) + "'");
      }
    }
  }

  template <class T>
  void read(const std::string& key, T& out) const
  {
    if (!node_ || node_.IsNull()) {
      return;
    }
    const YAML::Node value = node_[key];
    if (!value) {
      return;
    }
    if (!value.IsScalar()) {
      fail_at(value, "'" + join(path_, key) + "' must be a scalar");
    }
    try {
      out = value.as<T>();
    } catch (const YAML::BadConversion&) {
      fail_at(value, "'" + join(path_, key) + "' has an invalid value '" + value.Scalar() + "'");
    }
  }

  [[nodiscard]] Section child(const std::string& key, std::set<std::string> allowed) const
  {
    // copy-construct: assigning a missing node throws in yaml-cpp
    const YAML::Node value = node_ && node_.IsMap() ? node_[key] : YAML::Node();
    return Section(value, join(path_, key), std::move(allowed));
  }

  [[nodiscard]] YAML::Node raw(const std::string& key) const
  {
    if (node_ && node_.IsMap()) {
      return node_[key];
    }
    return {};
  }

  [[nodiscard]] const std::string& path() const { return path_; }

private:
  YAML::Node node_;
  std::string path_;
};

void read_initial(const Section& parent, const std::string& key, InitialData& out)
{
  const Section s = parent.child(key, {"kind", "amplitude", "mode"});
  s.read("kind", out.kind);
  s.read("amplitude", out.amplitude);
  s.read("mode", out.mode);
}

LevelConfig read_level(const YAML::Node& node, const std::string& path)
{
  if (!node.IsSequence() || node.size() != 2) {
    fail_at(node, "'" + path + "' must be a pair [N, m]");
  }
  LevelConfig level;
  try {
    level.steps = node[0].as<int>();
    level.m = node[1].as<int>();
  } catch (const YAML::BadConversion&) {
    fail_at(node, "'" + path + "' must hold two integers");
  }
  return level;
}

void require(bool condition, const std::string& message)
{
  if (!condition) {
    throw ConfigError(message);
  }
}

void require_one_of(const std::string& value, std::initializer_list<const char*> options, const std::string& key)
{
  std::string list;
  for (const char* o : options) {
    if (value == o) {
      return;
    }
    list += list.empty() ? o : std::string(" | ") + o;
  }
  throw ConfigError("'" + key + "' must be one of " + list + ", got '" + value + "'");
}

bool manufactured(const RunConfig& c)
{
  return c.problem.forcing.kind == "manufactured";
}

Vector initial_vector(const InitialData& data, const Mesh1D& mesh, const RunConfig& config, bool velocity)
{
  if (data.kind == "sine") {
    const double k = data.mode * std::numbers::pi;
    return mesh.interpolate([&](double x) { return data.amplitude * std::sin(k * x); });
  }
  if (data.kind == "exact") {
    const double a = config.problem.forcing.amplitude;
    if (!velocity) {
      return Vector::Zero(mesh.dim());
    }
    return mesh.interpolate([&](double x) { return a * std::numbers::pi * std::sin(std::numbers::pi * x); });
  }
  return Vector::Zero(mesh.dim());
}

std::string fmt(double x)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // keep floats recognizable as floats in the echo
  if (s.find_first_of(".eEn") == std::string::npos) {
    s += ".0";
  }
  return s;
}

std::string quoted(const std::string& s)
{
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') {
      out += '\\';
    }
    out += ch;
  }
  return out + "\"";
}

}  // namespace

RunConfig parse_config(const std::string& text)
{
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  RunConfig c;
  const Section top(root, "", {"problem", "discretization", "solver", "experiment", "output", "derived"});

  const Section p = top.child("problem", {"model", "damping", "mu", "b", "noise", "u0", "v0", "forcing", "scalar"});
  p.read("model", c.problem.model);
  p.read("damping", c.problem.damping);
  p.read("mu", c.problem.mu);
  p.read("b", c.problem.b);
  const Section noise = p.child("noise", {"kind", "alpha", "beta", "gamma", "s"});
  noise.read("kind", c.problem.noise.kind);
  noise.read("alpha", c.problem.noise.alpha);
  noise.read("beta", c.problem.noise.beta);
  noise.read("gamma", c.problem.noise.gamma);
  noise.read("s", c.problem.noise.s);
  read_initial(p, "u0", c.problem.u0);
  read_initial(p, "v0", c.problem.v0);
  const Section forcing = p.child("forcing", {"kind", "amplitude"});
  forcing.read("kind", c.problem.forcing.kind);
  forcing.read("amplitude", c.problem.forcing.amplitude);
  const Section scalar = p.child("scalar", {"u0", "v0"});
  scalar.read("u0", c.problem.scalar_u0);
  scalar.read("v0", c.problem.scalar_v0);

  const Section d = top.child("discretization", {"N", "m", "r", "T"});
  d.read("N", c.discretization.steps);
  d.read("m", c.discretization.m);
  d.read("r", c.discretization.modes);
  d.read("T", c.discretization.horizon);

  const Section s = top.child("solver", {"tol", "max_iters", "relaxation", "strategy", "override_gate"});
  s.read("tol", c.solver.tol);
  s.read("max_iters", c.solver.max_iters);
  s.read("relaxation", c.solver.relaxation);
  s.read("strategy", c.solver.strategy);
  s.read("override_gate", c.solver.override_gate);

  const Section e = top.child("experiment", {"kind", "paths", "base_seed", "levels", "reference", "samples",
                                             "defect_tolerance", "band", "perturbation"});
  e.read("kind", c.experiment.kind);
  e.read("paths", c.experiment.paths);
  e.read("base_seed", c.experiment.base_seed);
  e.read("samples", c.experiment.samples);
  e.read("defect_tolerance", c.experiment.defect_tolerance);
  e.read("band", c.experiment.band);
  e.read("perturbation", c.experiment.perturbation);
  if (const YAML::Node levels = e.raw("levels"); levels && !levels.IsNull()) {
    if (!levels.IsSequence()) {
      fail_at(levels, "'experiment.levels' must be a list of [N, m] pairs");
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
      c.experiment.levels.push_back(read_level(levels[i], "experiment.levels[" + std::to_string(i) + "]"));
    }
  }
  if (const YAML::Node ref = e.raw("reference"); ref && !ref.IsNull()) {
    c.experiment.reference = read_level(ref, "experiment.reference");
  }

  const Section o = top.child("output", {"directory", "trajectories"});
  o.read("directory", c.output.directory);
  o.read("trajectories", c.output.trajectories);

  // the echo carries derived constants; they are recomputed, so only the keys are checked
  (void)top.child("derived", {"lambda", "lambda_a", "lambda_b", "kappa", "mu_a", "mu_b", "lambda_tau"});
  return c;
}

std::vector<Level> study_levels(const RunConfig& config)
{
  std::vector<Level> out;
  for (const auto& l : config.experiment.levels) {
    out.push_back({l.steps, l.m});
  }
  return out;
}

std::optional<Level> study_reference(const RunConfig& config)
{
  if (manufactured(config)) {
    return std::nullopt;
  }
  if (config.experiment.reference) {
    return Level{config.experiment.reference->steps, config.experiment.reference->m};
  }
  if (config.experiment.levels.empty()) {
    return std::nullopt;
  }
  const auto& last = config.experiment.levels.back();
  return Level{2 * last.steps, 2 * last.m + 1};
}

void validate(RunConfig& c)
{
  const auto& p = c.problem;
  require_one_of(p.model, {"fem", "scalar"}, "problem.model");
  require_one_of(p.damping, {"rho", "linear"}, "problem.damping");
  require_one_of(p.noise.kind, {"zero", "spectral"}, "problem.noise.kind");
  require_one_of(p.forcing.kind, {"none", "constant", "manufactured"}, "problem.forcing.kind");
  require_one_of(p.u0.kind, {"zero", "sine", "exact"}, "problem.u0.kind");
  require_one_of(p.v0.kind, {"zero", "sine", "exact"}, "problem.v0.kind");
  require_one_of(c.solver.strategy, {"newton", "picard"}, "solver.strategy");
  require_one_of(c.experiment.kind, {"single", "energy", "apriori", "uniqueness", "convergence", "assumptions"},
                 "experiment.kind");

  require(p.mu > 0.0, "problem.mu must be > 0");
  require(p.b > 0.0, "problem.b must be > 0");
  require(p.u0.mode >= 1 && p.v0.mode >= 1, "initial-data sine mode must be >= 1");
  if (p.noise.kind == "spectral") {
    require(p.noise.s > 0.5, "problem.noise.s must be > 1/2 so the noise is summable");
  }
  const bool exact_data = p.u0.kind == "exact" || p.v0.kind == "exact";
  if (manufactured(c)) {
    require(p.model == "fem" && p.damping == "linear" && p.noise.kind == "zero",
            "manufactured forcing needs model fem, linear damping and zero noise");
    require(p.u0.kind == "exact" && p.v0.kind == "exact", "manufactured forcing needs u0 and v0 of kind exact");
  } else {
    require(!exact_data, "initial data of kind exact needs manufactured forcing");
  }
  if (p.model == "scalar") {
    require(p.damping == "linear" && p.noise.kind == "zero" && p.forcing.kind == "none",
            "the scalar model needs linear damping, zero noise and no forcing");
  }

  const auto& d = c.discretization;
  require(d.horizon > 0.0, "discretization.T must be > 0");
  require(d.steps >= 1, "discretization.N must be >= 1");
  require(d.m >= 1, "discretization.m must be >= 1");
  require(d.modes >= 1, "discretization.r must be >= 1");
  require(c.experiment.paths >= 1, "experiment.paths must be >= 1");
  require(c.experiment.samples >= 1, "experiment.samples must be >= 1");
  require(c.experiment.defect_tolerance > 0.0, "experiment.defect_tolerance must be > 0");
  require(c.experiment.band > 0.0, "experiment.band must be > 0");
  require(c.solver.tol > 0.0, "solver.tol must be > 0");
  require(c.solver.max_iters >= 1, "solver.max_iters must be >= 1");
  require(c.solver.relaxation > 0.0 && c.solver.relaxation <= 1.0, "solver.relaxation must lie in (0, 1]");

  // every grid the experiment integrates on
  std::vector<Level> grids;
  if (c.experiment.kind == "convergence") {
    const auto levels = study_levels(c);
    require(!levels.empty(), "experiment.levels is required for a convergence study");
    require(p.model == "fem", "a convergence study needs model fem");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      require(levels[i].steps >= 1 && levels[i].m >= 1, "experiment.levels entries need N >= 1 and m >= 1");
      if (i > 0) {
        require(levels[i].steps > levels[i - 1].steps && levels[i].m > levels[i - 1].m,
                "experiment.levels must be strictly refining in both N and m");
      }
    }
    grids = levels;
    const auto ref = study_reference(c);
    const int finest_steps = ref ? ref->steps : levels.back().steps;
    if (ref) {
      require(ref->steps > levels.back().steps && ref->m > levels.back().m,
              "experiment.reference must be finer than every level");
      grids.push_back(*ref);
    }
    for (const Level& l : levels) {
      const int ratio = finest_steps / l.steps;
      require(finest_steps % l.steps == 0 && (ratio & (ratio - 1)) == 0,
              "every level's N must divide the finest N by a power of two");
      if (ref) {
        require((ref->m + 1) % (l.m + 1) == 0, "the reference mesh must contain every level's mesh");
      }
    }
  } else {
    grids.push_back({d.steps, d.m});
  }
  if (p.model == "fem" && p.noise.kind == "spectral") {
    for (const Level& l : grids) {
      require(d.modes <= l.m, "discretization.r = " + std::to_string(d.modes) +
                                  " exceeds the available noise modes m = " + std::to_string(l.m));
    }
  }

  c.derived = {};
  for (const Level& l : grids) {
    RunConfig probe = c;
    probe.discretization.m = l.m;
    const ProblemSpec spec = build_problem(probe);
    const auto& k = spec.constants;
    const double lambda_tau = k.lambda * d.horizon / l.steps;
    c.derived.lambda = std::max(c.derived.lambda, k.lambda);
    c.derived.lambda_a = std::max(c.derived.lambda_a, k.lambda_a);
    c.derived.lambda_b = std::max(c.derived.lambda_b, k.lambda_b);
    c.derived.kappa = std::max(c.derived.kappa, k.kappa);
    c.derived.mu_a = k.mu_a;
    c.derived.mu_b = k.mu_b;
    c.derived.lambda_tau = std::max(c.derived.lambda_tau, lambda_tau);
    if (!c.solver.override_gate && !(lambda_tau < 1.0)) {
      std::ostringstream msg;
      msg << "step restriction violated: lambda*tau = " << lambda_tau << " >= 1 at N = " << l.steps
          << " (lambda = " << k.lambda << "); the discrete a priori estimate and uniqueness need lambda*tau < 1";
      throw ConfigError(msg.str());
    }
  }
}

RunConfig parse_and_validate(const std::string& text)
{
  RunConfig c = parse_config(text);
  validate(c);
  return c;
}

std::string to_yaml(const RunConfig& c)
{
  std::ostringstream out;
  const auto& p = c.problem;
  auto initial = [&](const char* key, const InitialData& d) {
    out << "  " << key << ":\n"
        << "    kind: " << d.kind << "\n"
        << "    amplitude: " << fmt(d.amplitude) << "\n"
        << "    mode: " << d.mode << "\n";
  };
  out << "problem:\n"
      << "  model: " << p.model << "\n"
      << "  damping: " << p.damping << "\n"
      << "  mu: " << fmt(p.mu) << "\n"
      << "  b: " << fmt(p.b) << "\n"
      << "  noise:\n"
      << "    kind: " << p.noise.kind << "\n"
      << "    alpha: " << fmt(p.noise.alpha) << "\n"
      << "    beta: " << fmt(p.noise.beta) << "\n"
      << "    gamma: " << fmt(p.noise.gamma) << "\n"
      << "    s: " << fmt(p.noise.s) << "\n";
  initial("u0", p.u0);
  initial("v0", p.v0);
  out << "  forcing:\n"
      << "    kind: " << p.forcing.kind << "\n"
      << "    amplitude: " << fmt(p.forcing.amplitude) << "\n"
      << "  scalar:\n"
      << "    u0: " << fmt(p.scalar_u0) << "\n"
      << "    v0: " << fmt(p.scalar_v0) << "\n";
  const auto& d = c.discretization;
  out << "discretization:\n"
      << "  N: " << d.steps << "\n"
      << "  m: " << d.m << "\n"
      << "  r: " << d.modes << "\n"
      << "  T: " << fmt(d.horizon) << "\n";
  out << "solver:\n"
      << "  tol: " << fmt(c.solver.tol) << "\n"
      << "  max_iters: " << c.solver.max_iters << "\n"
      << "  relaxation: " << fmt(c.solver.relaxation) << "\n"
      << "  strategy: " << c.solver.strategy << "\n"
      << "  override_gate: " << (c.solver.override_gate ? "true" : "false") << "\n";
  const auto& e = c.experiment;
  out << "experiment:\n"
      << "  kind: " << e.kind << "\n"
      << "  paths: " << e.paths << "\n"
      << "  base_seed: " << e.base_seed << "\n"
      << "  levels: [";
  for (std::size_t i = 0; i < e.levels.size(); ++i) {
    out << (i ? ", " : "") << "[" << e.levels[i].steps << ", " << e.levels[i].m << "]";
  }
  out << "]\n";
  if (e.reference) {
    out << "  reference: [" << e.reference->steps << ", " << e.reference->m << "]\n";
  }
  out << "  samples: " << e.samples << "\n"
      << "  defect_tolerance: " << fmt(e.defect_tolerance) << "\n"
      << "  band: " << fmt(e.band) << "\n"
      << "  perturbation: " << fmt(e.perturbation) << "\n";
  out << "output:\n"
      << "  directory: " << quoted(c.output.directory) << "\n"
      << "  trajectories: " << (c.output.trajectories ? "true" : "false") << "\n";
  const auto& k = c.derived;
  out << "derived:\n"
      << "  lambda: " << fmt(k.lambda) << "\n"
      << "  lambda_a: " << fmt(k.lambda_a) << "\n"
      << "  lambda_b: " << fmt(k.lambda_b) << "\n"
      << "  kappa: " << fmt(k.kappa) << "\n"
      << "  mu_a: " << fmt(k.mu_a) << "\n"
      << "  mu_b: " << fmt(k.mu_b) << "\n"
      << "  lambda_tau: " << fmt(k.lambda_tau) << "\n";
  return out.str();
}

ProblemSpec build_problem(const RunConfig& config, const Mesh1D& mesh)
{
  const auto& p = config.problem;
  auto shared_mesh = std::make_shared<const Mesh1D>(mesh);
  std::shared_ptr<const DampingOperator> damping;
  if (p.damping == "rho") {
    damping = std::make_shared<RhoDamping>(mesh);
  } else {
    damping = std::make_shared<LinearDamping>(LinearDamping::laplacian(mesh, p.mu));
  }
  ElasticOperator elastic(mesh.stiffness(), p.b);
  std::shared_ptr<const NoiseOperator> noise;
  if (p.noise.kind == "spectral") {
    noise = std::make_shared<SpectralNoise>(
        mesh, SpectralNoise::Parameters{p.noise.alpha, p.noise.beta, p.noise.gamma, p.noise.s}, p.b);
  } else {
    noise = std::make_shared<ZeroNoise>(mesh.mass(), std::max(config.discretization.modes, mesh.dim()));
  }
  Forcing forcing = Forcing::zero(mesh.dim());
  if (p.forcing.kind == "constant") {
    forcing = Forcing::separable(mesh, {{PolynomialInTime{{1.0}}, ConstantInSpace{p.forcing.amplitude}}});
  } else if (p.forcing.kind == "manufactured") {
    // u = a sin(pi t) sin(pi x): f = u_tt + A u_t + B u
    const double a = p.forcing.amplitude;
    const double pi = std::numbers::pi;
    forcing = Forcing::separable(
        mesh, {{CosineInTime{a * (p.b - 1.0) * pi * pi, pi, -pi / 2.0}, SineInSpace{1.0, 1}},
               {CosineInTime{a * p.mu * pi * pi * pi, pi, 0.0}, SineInSpace{1.0, 1}}});
  }
  Vector u0 = initial_vector(p.u0, mesh, config, false);
  Vector v0 = initial_vector(p.v0, mesh, config, true);
  return make_problem(mesh.matrices(), std::move(shared_mesh), std::move(damping), std::move(elastic),
                      std::move(noise), std::move(forcing), std::move(u0), std::move(v0));
}

ProblemSpec build_scalar_problem(const RunConfig& config)
{
  const auto& p = config.problem;
  const SymTridiagonal one = SymTridiagonal::identity(1);
  FemMatrices fem{one, one};
  auto damping = std::make_shared<LinearDamping>(p.mu * one, p.mu);
  ElasticOperator elastic(one, p.b);
  auto noise = std::make_shared<ZeroNoise>(one, config.discretization.modes);
  Vector u0 = Vector::Constant(1, p.scalar_u0);
  Vector v0 = Vector::Constant(1, p.scalar_v0);
  return make_problem(fem, nullptr, std::move(damping), std::move(elastic), std::move(noise), Forcing::zero(1),
                      std::move(u0), std::move(v0));
}

ProblemSpec build_problem(const RunConfig& config)
{
  if (config.problem.model == "scalar") {
    return build_scalar_problem(config);
  }
  return build_problem(config, Mesh1D(config.discretization.m));
}

ProblemFamily build_family(const RunConfig& config)
{
  ProblemFamily family;
  family.build = [config](const Mesh1D& mesh) { return build_problem(config, mesh); };
  family.modes = config.discretization.modes;
  family.horizon = config.discretization.horizon;
  family.solver_tol = config.solver.tol;
  family.max_iters = config.solver.max_iters;
  family.override_gate = config.solver.override_gate;
  if (manufactured(config)) {
    const double a = config.problem.forcing.amplitude;
    const double pi = std::numbers::pi;
    family.exact_v = [a, pi](const Mesh1D& mesh, double t) {
      return mesh.interpolate([&](double x) { return a * pi * std::cos(pi * t) * std::sin(pi * x); });
    };
    family.exact_u = [a, pi](const Mesh1D& mesh, double t) {
      return mesh.interpolate([&](double x) { return a * std::sin(pi * t) * std::sin(pi * x); });
    };
  }
  return family;
}

SchemeParams scheme_params(const RunConfig& config, const ProblemSpec& spec)
{
  SchemeParams params =
      SchemeParams::make(spec, config.discretization.steps, config.discretization.horizon, config.solver.tol,
                         config.solver.max_iters, config.solver.relaxation, config.solver.override_gate);
  params.strategy = config.solver.strategy == "picard" ? SolverStrategy::PicardFirst : SolverStrategy::NewtonFirst;
  return params;
}

}  // namespace stochwave
