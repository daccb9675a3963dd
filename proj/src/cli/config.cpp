#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "subnewton/cli.hpp"
#include "subnewton/error.hpp"

namespace subnewton::cli {

using nlohmann::json;

namespace {

/// Reads fields of one JSON object, recording problems against their path.
class Fields {
 public:
  Fields(const json& node, std::string path, std::vector<std::string>& issues)
      : node_(node), path_(std::move(path)), issues_(issues) {
    if (!node_.is_object()) {
      issue("", "must be an object");
      ok_ = false;
    }
  }
  ~Fields() {
    if (!ok_) return;
    for (const auto& item : node_.items())
      if (!seen_.count(item.key())) issue(item.key(), "unknown key");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return ok_ && node_.contains(key);
  }
  const json& at(const std::string& key) {
    seen_.insert(key);
    return node_.at(key);
  }
  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void issue(const std::string& key, const std::string& message) {
    issues_.push_back((key.empty() ? path_ : path(key)) + ": " + message);
  }

  std::optional<double> number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = at(key);
    if (!v.is_number()) {
      issue(key, "must be a number");
      return std::nullopt;
    }
    return v.get<double>();
  }
  void number(const std::string& key, double& target) {
    if (auto v = number(key)) target = *v;
  }
  std::optional<std::uint64_t> unsigned_integer(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = at(key);
    if (!v.is_number_unsigned()) {
      issue(key, "must be a nonnegative integer");
      return std::nullopt;
    }
    return v.get<std::uint64_t>();
  }
  template <class Int>
  void integer(const std::string& key, Int& target) {
    if (auto v = unsigned_integer(key)) target = static_cast<Int>(*v);
  }
  std::optional<std::string> string(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = at(key);
    if (!v.is_string()) {
      issue(key, "must be a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }
  void string(const std::string& key, std::string& target) {
    if (auto v = string(key)) target = *v;
  }
  std::optional<bool> boolean(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = at(key);
    if (!v.is_boolean()) {
      issue(key, "must be true or false");
      return std::nullopt;
    }
    return v.get<bool>();
  }
  std::optional<Vector> vector(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return as_vector(at(key), key);
  }
  std::optional<Vector> as_vector(const json& v, const std::string& key) {
    if (!v.is_array()) {
      issue(key, "must be an array of numbers");
      return std::nullopt;
    }
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        issue(key, "must be an array of numbers");
        return std::nullopt;
      }
      out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return out;
  }
  /// Parses a string key through `parse`, converting library errors to issues.
  template <class T, class Parse>
  void choice(const std::string& key, T& target, Parse parse) {
    if (auto s = string(key)) {
      try {
        target = parse(*s);
      } catch (const Error& e) {
        issue(key, e.detail());
      }
    }
  }

 private:
  const json& node_;
  std::string path_;
  std::vector<std::string>& issues_;
  std::set<std::string> seen_;
  bool ok_ = true;
};

SizeVariant parse_variant(const std::string& s) {
  if (s == "basic") return SizeVariant::HessianBasic;
  if (s == "convex") return SizeVariant::HessianConvex;
  if (s == "intrinsic") return SizeVariant::HessianIntrinsic;
  fail(ErrorKind::Configuration, "expected basic, convex or intrinsic");
}

Replacement parse_replacement(const std::string& s) {
  if (s == "with") return Replacement::With;
  if (s == "without") return Replacement::Without;
  fail(ErrorKind::Configuration, "expected with or without");
}

KappaPower parse_kappa_power(const std::string& s) {
  if (s == "squared") return KappaPower::Squared;
  if (s == "first") return KappaPower::FirstPower;
  fail(ErrorKind::Configuration, "expected squared or first");
}

ThresholdRule parse_threshold_rule(const std::string& s) {
  if (s == "global") return ThresholdRule::Global;
  if (s == "local") return ThresholdRule::Local;
  fail(ErrorKind::Configuration, "expected global or local");
}

Regularity parse_regularity(const std::string& s) {
  if (s == "global") return Regularity::Global;
  if (s == "local") return Regularity::Local;
  fail(ErrorKind::Configuration, "expected global or local");
}

/// "bound" | "full" | positive integer
void parse_sample_mode(Fields& f, const std::string& key, SampleSizeMode& mode) {
  if (!f.has(key)) return;
  const json& v = f.at(key);
  if (v.is_number_unsigned() && v.get<std::uint64_t>() >= 1) {
    mode = SampleSizeMode::fixed_size(v.get<std::uint64_t>());
  } else if (v == "bound") {
    mode = SampleSizeMode::bound();
  } else if (v == "full") {
    mode = SampleSizeMode::full();
  } else {
    f.issue(key, "expected \"bound\", \"full\" or a positive integer");
  }
}

/// "uniform" | "pointwise" | "exact" | positive number
void parse_gradient_bound(Fields& f, const std::string& key, GradientBoundSource& source) {
  if (!f.has(key)) return;
  const json& v = f.at(key);
  using K = GradientBoundSource::Kind;
  if (v.is_number()) {
    source = {K::Fixed, v.get<double>()};
    if (!(source.value > 0.0)) f.issue(key, "must be positive");
  } else if (v == "uniform") {
    source = {K::Uniform, 0.0};
  } else if (v == "pointwise") {
    source = {K::Pointwise, 0.0};
  } else if (v == "exact") {
    source = {K::Exact, 0.0};
  } else {
    f.issue(key, "expected \"uniform\", \"pointwise\", \"exact\" or a number");
  }
}

void parse_problem(Fields& f, ProblemConfig& problem) {
  f.string("source", problem.source);
  if (problem.source != "synthetic" && problem.source != "csv")
    f.issue("source", "expected synthetic or csv");
  f.choice("kind", problem.synthetic.kind,
           [](const std::string& s) { return parse_objective_kind(s); });
  if (!f.has("kind")) f.issue("kind", "required");
  f.string("path", problem.path);
  f.integer("n", problem.synthetic.n);
  if (auto p = f.unsigned_integer("p")) problem.synthetic.p = static_cast<Eigen::Index>(*p);
  f.number("conditioning", problem.synthetic.conditioning);
  f.integer("seed", problem.synthetic.seed);
  f.number("C", problem.synthetic.svm_c);
  problem.lipschitz = f.number("lipschitz");
  if (problem.source == "csv" && problem.path.empty()) f.issue("path", "required for csv data");
  if (problem.synthetic.n < 1) f.issue("n", "must be >= 1");
  if (problem.synthetic.p < 1) f.issue("p", "must be >= 1");
  if (!(problem.synthetic.conditioning >= 1.0)) f.issue("conditioning", "must be >= 1");
  if (!(problem.synthetic.svm_c > 0.0)) f.issue("C", "must be positive");
  if (problem.lipschitz && !(*problem.lipschitz >= 0.0)) f.issue("lipschitz", "must be >= 0");
}

void parse_constraint(Fields& f, ConstraintSet& constraint) {
  std::string type = "unconstrained";
  f.string("type", type);
  try {
    if (type == "unconstrained") {
      constraint = ConstraintSet::unconstrained();
    } else if (type == "l1_ball") {
      double radius = 1.0;
      f.number("radius", radius);
      constraint = ConstraintSet::l1_ball(radius);
    } else if (type == "box") {
      auto lower = f.vector("lower");
      auto upper = f.vector("upper");
      if (!lower || !upper) {
        f.issue("lower", "box needs lower and upper arrays");
        return;
      }
      constraint = ConstraintSet::box(*lower, *upper);
    } else {
      f.issue("type", "expected unconstrained, l1_ball or box");
    }
  } catch (const Error& e) {
    f.issue("", e.detail());
  }
}

void parse_algorithm(Fields& f, RunConfig& cfg) {
  AlgorithmConfig& a = cfg.algorithm;
  f.choice("name", a.algorithm, [](const std::string& s) { return subnewton::parse_algorithm(s); });
  if (!f.has("name")) f.issue("name", "required");
  if (a.algorithm == Algorithm::ScheduledHessian || a.algorithm == Algorithm::SharedSample)
    a.schedule = Schedule::Geometric;
  f.number("epsilon", a.epsilon);
  f.number("epsilon2", a.epsilon_gradient);
  f.number("epsilon0", a.epsilon_pilot);
  f.number("delta", a.delta);
  f.number("rho", a.rho);
  f.choice("schedule", a.schedule, [](const std::string& s) { return parse_schedule(s); });
  f.number("lambda", a.lambda);
  f.choice("threshold_rule", a.threshold_rule, parse_threshold_rule);
  f.choice("variant", a.size_variant, parse_variant);
  f.choice("kappa_power", a.kappa_power, parse_kappa_power);
  f.choice("replacement", a.replacement, parse_replacement);
  if (f.has("kappa")) {
    const json& v = f.at("kappa");
    if (v == "auto") {
      cfg.kappa_auto = true;
    } else if (v.is_number()) {
      a.kappa = v.get<double>();
    } else {
      f.issue("kappa", "expected a number or \"auto\"");
    }
  }
  if (f.has("intrinsic_dimension")) {
    const json& v = f.at("intrinsic_dimension");
    if (v == "auto") {
      cfg.intrinsic_auto = true;
    } else if (v.is_number()) {
      a.intrinsic_dimension = v.get<double>();
    } else {
      f.issue("intrinsic_dimension", "expected a number or \"auto\"");
    }
  }
  parse_sample_mode(f, "hessian_sample", a.hessian_sampling);
  parse_sample_mode(f, "gradient_sample", a.gradient_sampling);
  parse_gradient_bound(f, "gradient_bound", a.gradient_bound);
  if (auto v = f.unsigned_integer("max_iterations")) a.max_iterations = static_cast<long>(*v);
  f.number("tolerance", a.tolerance);
  f.number("inner_tolerance", a.subproblem.tolerance);
  if (auto v = f.unsigned_integer("inner_max_iterations"))
    a.subproblem.max_inner_iterations = static_cast<long>(*v);
}

void parse_start(RunConfig& cfg, const json& v, std::vector<std::string>& issues) {
  StartConfig& s = cfg.start;
  if (v == "zeros") {
    s.kind = StartConfig::Kind::Zeros;
  } else if (v.is_array()) {
    std::vector<std::string> local;
    Fields dummy(json::object(), "start", local);
    if (auto x = dummy.as_vector(v, "")) {
      s.kind = StartConfig::Kind::Explicit;
      s.x = *x;
    }
    issues.insert(issues.end(), local.begin(), local.end());
  } else if (v.is_object()) {
    Fields f(v, "start", issues);
    s.kind = StartConfig::Kind::Distance;
    if (auto d = f.number("distance_from_reference")) {
      s.distance = *d;
      if (!(s.distance >= 0.0)) f.issue("distance_from_reference", "must be >= 0");
    } else {
      f.issue("distance_from_reference", "required");
    }
    f.integer("seed", s.seed);
  } else {
    issues.push_back("start: expected \"zeros\", an array, or {\"distance_from_reference\": r}");
  }
}

void parse_check(Fields& f, CheckConfig& c) {
  f.string("type", c.type);
  static const std::set<std::string> kTypes = {"lemma1", "lemma4", "lemma5", "recursion", "rates"};
  if (!kTypes.count(c.type)) f.issue("type", "expected lemma1, lemma4, lemma5, recursion or rates");
  if (f.has("point")) {
    const json& v = f.at("point");
    if (v.is_array()) {
      c.point = "explicit";
      c.point_x = f.as_vector(v, "point");
    } else if (v == "reference" || v == "start") {
      c.point = v.get<std::string>();
    } else {
      f.issue("point", "expected \"reference\", \"start\" or an array");
    }
  }
  if (auto v = f.unsigned_integer("trials")) c.trials = static_cast<long>(*v);
  if (auto v = f.unsigned_integer("runs")) c.runs = static_cast<long>(*v);
  f.number("epsilon", c.epsilon);
  f.number("delta", c.delta);
  f.choice("variant", c.variant, parse_variant);
  f.choice("kappa_power", c.kappa_power, parse_kappa_power);
  f.choice("replacement", c.replacement, parse_replacement);
  c.kappa = f.number("kappa");
  c.size_override = f.unsigned_integer("size_override");
  f.number("size_scale", c.size_scale);
  parse_gradient_bound(f, "gradient_bound", c.g_bound);
  c.threshold = f.number("threshold");
  f.choice("regularity", c.regularity, parse_regularity);
  f.number("slack", c.slack);
  f.number("noise_floor", c.noise_floor);
  if (auto v = f.unsigned_integer("tail")) c.tail = static_cast<long>(*v);
  f.string("pattern", c.pattern);
  c.rho = f.number("rho");

  const bool lemma = c.type == "lemma1" || c.type == "lemma4" || c.type == "lemma5";
  if (lemma && c.trials < 100) f.issue("trials", "must be >= 100");
  if (c.runs < 1) f.issue("runs", "must be >= 1");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) f.issue("epsilon", "must lie in (0, 1)");
  if (!(c.delta > 0.0 && c.delta < 1.0)) f.issue("delta", "must lie in (0, 1)");
  if (!(c.size_scale > 0.0)) f.issue("size_scale", "must be positive");
  if (c.size_override && *c.size_override < 1) f.issue("size_override", "must be >= 1");
  if (c.threshold && !(*c.threshold >= 0.0 && *c.threshold <= 1.0))
    f.issue("threshold", "must lie in [0, 1]");
  static const std::set<std::string> kPatterns = {"q_linear", "superlinear", "q_superlinear",
                                                  "slow_growth", "r_linear", "r_superlinear"};
  if (!kPatterns.count(c.pattern)) f.issue("pattern", "unknown rate pattern");
}

}  // namespace

RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Configuration, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  std::vector<std::string> issues;
  {
    Fields top(doc, "", issues);
    top.integer("seed", cfg.seed);
    if (top.has("problem")) {
      Fields f(top.at("problem"), "problem", issues);
      parse_problem(f, cfg.problem);
    } else {
      top.issue("problem", "required");
    }
    if (top.has("constraint")) {
      Fields f(top.at("constraint"), "constraint", issues);
      parse_constraint(f, cfg.constraint);
    }
    if (top.has("algorithm")) {
      Fields f(top.at("algorithm"), "algorithm", issues);
      parse_algorithm(f, cfg);
      cfg.has_algorithm = true;
    }
    if (top.has("start")) parse_start(cfg, top.at("start"), issues);
    top.string("reference", cfg.reference);
    if (cfg.reference != "auto" && cfg.reference != "none")
      top.issue("reference", "expected auto or none");
    if (top.has("output")) {
      Fields f(top.at("output"), "output", issues);
      f.string("trace", cfg.trace_path);
      f.string("report", cfg.report_path);
    }
    if (top.has("verify")) {
      Fields f(top.at("verify"), "verify", issues);
      if (f.has("checks")) {
        const json& list = f.at("checks");
        if (!list.is_array()) {
          f.issue("checks", "must be an array");
        } else {
          for (std::size_t i = 0; i < list.size(); ++i) {
            Fields cf(list[i], "verify.checks[" + std::to_string(i) + "]", issues);
            CheckConfig c;
            parse_check(cf, c);
            cfg.checks.push_back(std::move(c));
          }
        }
      }
    }
  }
  if (seed_override) cfg.seed = *seed_override;
  cfg.algorithm.seed = cfg.seed;
  if (!cfg.has_algorithm) {
    for (const auto& c : cfg.checks) {
      if (c.type == "recursion" || c.type == "rates") {
        issues.push_back("algorithm: required by recursion and rates checks");
        break;
      }
    }
  }

  if (doc.is_object() && doc.contains("algorithm")) {
    // Range and cross-field validation; "auto" constants are filled in later.
    AlgorithmConfig probe = cfg.algorithm;
    if (cfg.kappa_auto) probe.kappa = 1.0;
    if (cfg.intrinsic_auto) probe.intrinsic_dimension = 1.0;
    try {
      probe.validate();
    } catch (const Error& e) {
      issues.push_back("algorithm." + e.detail());
    }
    if (cfg.start.kind == StartConfig::Kind::Explicit &&
        cfg.start.x.size() != cfg.problem.synthetic.p && cfg.problem.source == "synthetic")
      issues.push_back("start: length must equal problem.p");
  }
  if (!issues.empty()) {
    std::string message = "invalid config";
    for (const auto& i : issues) message += "\n  " + i;
    fail(ErrorKind::Configuration, message);
  }
  return cfg;
}

RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), seed_override);
}

std::optional<std::uint64_t> seed_from_environment() {
  const char* raw = std::getenv("SUBNEWTON_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(raw, &end, 10);
  if (*end != '\0' || raw[0] == '-')
    fail(ErrorKind::Configuration, "SUBNEWTON_SEED must be an unsigned integer");
  return static_cast<std::uint64_t>(v);
}

}  // namespace subnewton::cli
