#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "subnewton/cli.hpp"
#include "subnewton/error.hpp"
#include "subnewton/rng.hpp"

namespace subnewton::cli {

std::string format_real(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string quoted(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

std::string real_array(const Vector& x) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) out += ",";
    out += format_real(x[i]);
  }
  return out + "]";
}

std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : "null"; }

/// Builds a single-line JSON object with keys in insertion order.
class Line {
 public:
  Line& raw(std::string_view key, const std::string& value) {
    body_ += body_.empty() ? "{" : ",";
    body_ += quoted(key) + ":" + value;
    return *this;
  }
  Line& real(std::string_view key, double v) { return raw(key, format_real(v)); }
  Line& real(std::string_view key, const std::optional<double>& v) {
    return raw(key, optional_real(v));
  }
  Line& count(std::string_view key, std::uint64_t v) { return raw(key, std::to_string(v)); }
  Line& text(std::string_view key, std::string_view v) { return raw(key, quoted(v)); }
  Line& flag(std::string_view key, bool v) { return raw(key, v ? "true" : "false"); }
  std::string str() const { return body_.empty() ? "{}" : body_ + "}"; }

 private:
  std::string body_;
};

}  // namespace

std::string trace_record_json(const IterationRecord& r) {
  Line line;
  line.count("k", static_cast<std::uint64_t>(r.k))
      .raw("x", real_array(r.x))
      .real("err", r.err)
      .count("sample_hess", r.sample_hess)
      .count("sample_grad", r.sample_grad)
      .real("eps_k", r.eps_k)
      .real("lambda_k", r.lambda_k)
      .count("sample_pilot", r.sample_pilot)
      .real("eps_grad_k", r.eps_grad_k)
      .real("grad_bound", r.grad_bound)
      .real("residual", r.model_residual)
      .count("inner_iterations", static_cast<std::uint64_t>(r.inner_iterations))
      .real("step_norm", r.step_norm)
      .real("step_size", r.step_size);
  return line.str();
}

namespace {

bool is_setup_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input:
    case ErrorKind::Configuration:
    case ErrorKind::Policy:
    case ErrorKind::Io:
    case ErrorKind::Domain:
    case ErrorKind::InsufficientData:
      return true;
    default:
      return false;
  }
}

/// Problem, reference point and start resolved from a config.
struct Setup {
  std::unique_ptr<ComponentOracle> oracle;
  std::optional<Vector> x_star;
  Vector x0;
};

Setup prepare(RunConfig& cfg) {
  Setup s;
  const ProblemConfig& pc = cfg.problem;
  if (pc.source == "synthetic") {
    s.oracle = std::make_unique<ComponentOracle>(make_synthetic(pc.synthetic).oracle);
  } else {
    const ObjectiveKind kind = pc.synthetic.kind;
    Dataset data = load_dataset_csv(pc.path, kind);
    if (kind == ObjectiveKind::SvmQuadHinge) {
      s.oracle = std::make_unique<ComponentOracle>(ComponentOracle::svm(std::move(data), pc.synthetic.svm_c));
    } else if (kind == ObjectiveKind::SyntheticQuadratic) {
      fail(ErrorKind::Configuration, "problem.kind: quadratic problems are synthetic only");
    } else {
      s.oracle = std::make_unique<ComponentOracle>(ComponentOracle::glm(kind, std::move(data)));
    }
  }
  const ComponentOracle& oracle = *s.oracle;
  if (pc.lipschitz) s.oracle->set_hessian_lipschitz(*pc.lipschitz);

  const bool need_reference = cfg.kappa_auto || cfg.intrinsic_auto ||
                              cfg.start.kind == StartConfig::Kind::Distance;
  if (cfg.reference == "auto" || need_reference) {
    ReferenceOptions ro;
    ro.seed = cfg.seed;
    try {
      s.x_star = reference_minimizer(oracle, cfg.constraint, ro).x;
    } catch (const Error&) {
      if (need_reference) throw;
    }
  }

  const ConeBasis identity = ConeBasis::identity(oracle.p());
  if (cfg.kappa_auto) cfg.algorithm.kappa = regularity_constants_at(oracle, *s.x_star, identity).kappa;
  if (cfg.intrinsic_auto)
    cfg.algorithm.intrinsic_dimension = intrinsic_dimension_at(oracle, *s.x_star, identity, 1).unscaled;

  switch (cfg.start.kind) {
    case StartConfig::Kind::Zeros:
      s.x0 = Vector::Zero(oracle.p());
      break;
    case StartConfig::Kind::Explicit:
      require(cfg.start.x.size() == oracle.p(), ErrorKind::Configuration,
              "start: length must equal the problem dimension");
      s.x0 = cfg.start.x;
      break;
    case StartConfig::Kind::Distance: {
      CounterRng rng(derive_stream_key(cfg.start.seed, 0, StreamPurpose::Start));
      Vector u(oracle.p());
      for (Eigen::Index j = 0; j < u.size(); ++j) u[j] = rng.normal();
      s.x0 = cfg.constraint.project(*s.x_star + cfg.start.distance * u / u.norm());
      break;
    }
  }
  require(cfg.constraint.contains(s.x0), ErrorKind::Configuration,
          "start: x0 is infeasible for the constraint");
  if (cfg.has_algorithm) cfg.algorithm.validate();
  return s;
}

int report_error(const Error& e, std::ostream& err) {
  err << e.what() << "\n";
  return is_setup_error(e.kind()) ? kExitConfig : kExitSolver;
}

std::string termination_name(Termination t) {
  return t == Termination::Tolerance ? "tolerance" : "max_iterations";
}

}  // namespace

int command_run(const std::string& config_path, std::ostream& out, std::ostream& err,
                std::optional<std::uint64_t> seed_override) {
  RunConfig cfg;
  Setup setup;
  try {
    cfg = load_config(config_path, seed_override);
    require(cfg.has_algorithm, ErrorKind::Configuration, "algorithm: required");
    setup = prepare(cfg);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitConfig;
  }

  std::ofstream trace_file;
  if (!cfg.trace_path.empty()) {
    trace_file.open(cfg.trace_path, std::ios::binary | std::ios::trunc);
    if (!trace_file) {
      err << "io error: cannot write trace '" << cfg.trace_path << "'\n";
      return kExitConfig;
    }
  }
  auto sink = [&](const IterationRecord& r) {
    if (trace_file.is_open()) trace_file << trace_record_json(r) << "\n";
  };

  Line summary;
  summary.text("summary", "run").text("algorithm", to_string(cfg.algorithm.algorithm));
  int code = kExitOk;
  try {
    const IterationTrace trace =
        run_algorithm(cfg.algorithm, *setup.oracle, cfg.constraint, setup.x0, setup.x_star, sink);
    code = trace.termination == Termination::Tolerance ? kExitOk : kExitMaxIterations;
    summary.text("termination", termination_name(trace.termination))
        .count("records", trace.size())
        .real("final_err", trace.back().err)
        .raw("x_final", real_array(trace.back().x));
  } catch (const Error& e) {
    code = is_setup_error(e.kind()) ? kExitConfig : kExitSolver;
    summary.text("termination", "error").text("error", e.what());
    err << e.what() << "\n";
  }
  if (trace_file.is_open()) {
    trace_file.flush();
    if (!trace_file) {
      err << "io error: failed writing trace '" << cfg.trace_path << "'\n";
      return kExitConfig;
    }
  }
  out << summary.str() << "\n";
  return code;
}

// ---------------------------------------------------------------------------
// verify

namespace {

std::string frequency_fields(const FrequencyEstimate& f) {
  Line l;
  l.count("successes", static_cast<std::uint64_t>(f.successes))
      .count("trials", static_cast<std::uint64_t>(f.trials))
      .real("frequency", f.frequency)
      .real("wilson_lower", f.lower)
      .real("wilson_upper", f.upper)
      .real("one_sided_lower", f.one_sided_lower);
  return l.str();
}

Vector check_point(const CheckConfig& c, const Setup& s) {
  if (c.point == "explicit") return *c.point_x;
  if (c.point == "start") return s.x0;
  require(s.x_star.has_value(), ErrorKind::Reference, "no reference minimizer available");
  return *s.x_star;
}

double gradient_bound_value(const GradientBoundSource& src, const ComponentOracle& oracle,
                            const Vector& x) {
  switch (src.kind) {
    case GradientBoundSource::Kind::Uniform: return gradient_bound(oracle, std::nullopt);
    case GradientBoundSource::Kind::Pointwise: return gradient_bound(oracle, x);
    case GradientBoundSource::Kind::Exact: return exact_gradient_bound(oracle, x);
    case GradientBoundSource::Kind::Fixed: return src.value;
  }
  return 0.0;
}

/// Recursion constants for the step from record k of a trace.
std::optional<RecursionConstants> step_constants(const AlgorithmConfig& a,
                                                 const IterationRecord& r, double gamma,
                                                 double lipschitz, Regularity reg,
                                                 Eigen::Index p) {
  if (!r.step_norm) return std::nullopt;
  try {
    switch (a.algorithm) {
      case Algorithm::SubsampledHessian:
      case Algorithm::ScheduledHessian:
        return hessian_recursion_constants(*r.eps_k, gamma, lipschitz, reg);
      case Algorithm::SpectralRegularized:
        return spectral_recursion_constants(*r.eps_k, gamma, *r.lambda_k, lipschitz, reg, p);
      case Algorithm::RidgeRegularized:
        return ridge_recursion_constants(*r.eps_k, gamma, a.lambda, lipschitz, reg);
      case Algorithm::IndependentGradient:
        return independent_gradient_constants(*r.eps_k, *r.eps_grad_k, gamma, lipschitz, reg);
      case Algorithm::SharedSample:
        return shared_sample_constants(*r.eps_k, gamma, lipschitz);
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::Domain) throw;
  }
  return std::nullopt;
}

bool pattern_flag(const RateReport& r, const std::string& pattern) {
  if (pattern == "q_linear") return r.q_linear;
  if (pattern == "superlinear") return r.superlinear;
  if (pattern == "q_superlinear") return r.q_superlinear;
  if (pattern == "slow_growth") return r.slow_growth;
  if (pattern == "r_linear") return r.r_linear;
  return r.r_superlinear;
}

std::string run_check(const CheckConfig& c, const RunConfig& cfg, const Setup& s, bool& passed) {
  const ComponentOracle& oracle = *s.oracle;
  const ConeBasis identity = ConeBasis::identity(oracle.p());
  Line line;
  line.text("check", c.type);

  ConcentrationOptions copt;
  copt.seed = cfg.seed;
  copt.size_override = c.size_override;
  copt.size_scale = c.size_scale;
  copt.kappa = c.kappa;

  if (c.type == "lemma1" || c.type == "lemma5") {
    const double threshold = c.threshold.value_or(1.0 - c.delta);
    SampleSizePolicy policy{c.variant, c.epsilon, c.delta, c.replacement, c.kappa_power};
    const auto rep = hessian_concentration_experiment(oracle, check_point(c, s), policy, c.trials,
                                                      identity, copt);
    const FrequencyEstimate& decisive = c.type == "lemma1" ? rep.spectrum : rep.joint;
    passed = decisive.passes(threshold);
    line.flag("passed", passed)
        .real("threshold", threshold)
        .count("sample_size", rep.sample_size)
        .real("kappa", rep.constants.kappa)
        .real("gamma", rep.constants.gamma)
        .raw("spectrum", frequency_fields(rep.spectrum))
        .raw("absolute_error", frequency_fields(rep.absolute_error))
        .raw("min_eigenvalue", frequency_fields(rep.min_eigenvalue))
        .raw("ratio", frequency_fields(rep.ratio))
        .raw("joint", frequency_fields(rep.joint));
    return line.str();
  }
  if (c.type == "lemma4") {
    const double threshold = c.threshold.value_or(1.0 - c.delta);
    const Vector x = check_point(c, s);
    const double g = gradient_bound_value(c.g_bound, oracle, x);
    const auto rep = gradient_concentration_experiment(oracle, x, c.epsilon, c.delta, g, c.trials,
                                                       identity, c.replacement, copt);
    passed = rep.deviation.passes(threshold);
    line.flag("passed", passed)
        .real("threshold", threshold)
        .count("sample_size", rep.sample_size)
        .real("g_bound", rep.g_bound)
        .real("max_deviation", rep.max_deviation)
        .raw("deviation", frequency_fields(rep.deviation));
    return line.str();
  }

  // recursion / rates: repeated runs of the configured driver
  require(s.x_star.has_value(), ErrorKind::Reference, "no reference minimizer available");
  const double threshold = c.threshold.value_or(c.type == "recursion" ? 1.0 - c.delta : 0.9);
  long good = 0, total = 0;
  long runs_ok = 0;
  for (long run = 0; run < c.runs; ++run) {
    AlgorithmConfig a = cfg.algorithm;
    a.seed = cfg.seed + static_cast<std::uint64_t>(run);
    const IterationTrace trace = run_algorithm(a, oracle, cfg.constraint, s.x0, s.x_star);
    const std::vector<double> errors = trace.errors(*s.x_star);
    if (c.type == "recursion") {
      const auto lip = oracle.hessian_lipschitz();
      require(lip.has_value(), ErrorKind::Configuration,
              "recursion check needs problem.lipschitz for this objective");
      double gamma = restricted_min_eigenvalue(oracle.full_hessian(*s.x_star), identity);
      if (c.regularity == Regularity::Global) {
        for (const auto& r : trace.records())
          gamma = std::min(gamma, restricted_min_eigenvalue(oracle.full_hessian(r.x), identity));
      }
      std::vector<std::optional<RecursionConstants>> per_step;
      for (const auto& r : trace.records())
        per_step.push_back(step_constants(a, r, gamma, *lip, c.regularity, oracle.p()));
      const RecursionReport rep = recursion_check(errors, per_step, c.slack, c.noise_floor);
      good += rep.satisfied;
      total += static_cast<long>(rep.steps.size());
    } else {
      RateOptions ro;
      ro.tail = c.tail;
      ro.noise_floor = c.noise_floor;
      ro.rho = c.rho;
      ++total;
      try {
        if (pattern_flag(fit_rates(errors, ro), c.pattern)) ++good;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::InsufficientData) throw;
      }
    }
    ++runs_ok;
  }
  const double frequency = total == 0 ? 1.0 : static_cast<double>(good) / static_cast<double>(total);
  passed = frequency >= threshold;
  line.flag("passed", passed)
      .real("threshold", threshold)
      .count("runs", static_cast<std::uint64_t>(runs_ok))
      .count(c.type == "recursion" ? "steps" : "evaluated", static_cast<std::uint64_t>(total))
      .count("satisfied", static_cast<std::uint64_t>(good))
      .real("frequency", frequency);
  if (c.type == "rates") line.text("pattern", c.pattern);
  return line.str();
}

}  // namespace

int command_verify(const std::string& config_path, std::ostream& out, std::ostream& err,
                   std::optional<std::uint64_t> seed_override) {
  RunConfig cfg;
  Setup setup;
  try {
    cfg = load_config(config_path, seed_override);
    setup = prepare(cfg);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitConfig;
  }
  std::ofstream report;
  if (!cfg.report_path.empty()) {
    report.open(cfg.report_path, std::ios::binary | std::ios::trunc);
    if (!report) {
      err << "io error: cannot write report '" << cfg.report_path << "'\n";
      return kExitConfig;
    }
  }
  bool all = true;
  for (const auto& c : cfg.checks) {
    bool passed = false;
    std::string line;
    try {
      line = run_check(c, cfg, setup, passed);
    } catch (const Error& e) {
      return report_error(e, err);
    }
    all = all && passed;
    out << line << "\n";
    if (report.is_open()) report << line << "\n";
  }
  Line summary;
  summary.text("summary", "verify")
      .count("checks", cfg.checks.size())
      .flag("passed", all);
  out << summary.str() << "\n";
  return all ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// gen-data / report

int command_gendata(const GenDataOptions& options, std::ostream& err) {
  try {
    require(options.spec.kind != ObjectiveKind::SyntheticQuadratic, ErrorKind::Configuration,
            "quadratic problems have no CSV form");
    const SyntheticProblem problem = make_synthetic(options.spec);
    save_dataset_csv(options.out_path, problem.oracle.data());
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

int command_report(const std::string& trace_path, const std::string& out_path, std::ostream& out,
                   std::ostream& err) {
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) {
    err << "io error: cannot open trace '" << trace_path << "'\n";
    return kExitConfig;
  }
  std::ostringstream table;
  table << "k,err,sample_hess,sample_grad,eps_k,lambda_k\n";
  auto cell = [](const nlohmann::json& rec, const char* key) -> std::string {
    if (!rec.contains(key) || rec[key].is_null()) return "";
    const auto& v = rec[key];
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    return format_real(v.get<double>());
  };
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      err << "input error: trace line " << line_no << " is not valid JSON\n";
      return kExitConfig;
    }
    table << cell(rec, "k") << "," << cell(rec, "err") << "," << cell(rec, "sample_hess") << ","
          << cell(rec, "sample_grad") << "," << cell(rec, "eps_k") << ","
          << cell(rec, "lambda_k") << "\n";
  }
  if (out_path.empty()) {
    out << table.str();
  } else {
    std::ofstream file(out_path, std::ios::binary | std::ios::trunc);
    file << table.str();
    if (!file) {
      err << "io error: cannot write '" << out_path << "'\n";
      return kExitConfig;
    }
  }
  return kExitOk;
}

}  // namespace subnewton::cli
