#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "subnewton/harness.hpp"
#include "subnewton/problems.hpp"
#include "subnewton/solver.hpp"

namespace subnewton::cli {

// Exit codes shared by the commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitMaxIterations = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitCheckFailed = 4;

struct ProblemConfig {
  std::string source = "synthetic";  // "synthetic" or "csv"
  std::string path;                  // csv only
  SyntheticSpec synthetic;           // kind, n, p, conditioning, seed, C
  std::optional<double> lipschitz;   // overrides the analytic metadata
};

struct StartConfig {
  enum class Kind { Zeros, Explicit, Distance } kind = Kind::Zeros;
  Vector x;
  double distance = 0.0;  // ||x0 - x*|| for Kind::Distance
  std::uint64_t seed = 0;
};

/// One entry of the `verify.checks` list.
struct CheckConfig {
  std::string type;            // lemma1, lemma4, lemma5, recursion, rates
  std::string point = "reference";
  std::optional<Vector> point_x;
  long trials = 500;
  long runs = 1;
  double epsilon = 0.5;
  double delta = 0.1;
  SizeVariant variant = SizeVariant::HessianBasic;
  KappaPower kappa_power = KappaPower::Squared;
  Replacement replacement = Replacement::With;
  std::optional<double> kappa;
  std::optional<std::uint64_t> size_override;
  double size_scale = 1.0;
  GradientBoundSource g_bound;
  std::optional<double> threshold;  // default 1 - delta (lemmas) or 0.9
  Regularity regularity = Regularity::Local;
  double slack = 0.0;
  double noise_floor = 0.0;
  long tail = 0;
  std::string pattern = "q_linear";
  std::optional<double> rho;
};

struct RunConfig {
  std::uint64_t seed = 0;
  ProblemConfig problem;
  ConstraintSet constraint;
  AlgorithmConfig algorithm;
  bool has_algorithm = false;  // required by `run` and by recursion/rates checks
  bool kappa_auto = false;
  bool intrinsic_auto = false;
  StartConfig start;
  std::string reference = "auto";  // "auto" or "none"
  std::string trace_path;          // empty: no trace file
  std::string report_path;         // verify output; empty: stdout only
  std::vector<CheckConfig> checks;
};

/// Parses a config document. Every problem is collected and reported in one
/// configuration error, one "field.path: message" per line. Unknown keys are
/// errors. `seed_override` replaces the top-level seed.
RunConfig parse_config(const std::string& text, std::optional<std::uint64_t> seed_override = {});
RunConfig load_config(const std::string& path, std::optional<std::uint64_t> seed_override = {});

/// SUBNEWTON_SEED, if set to an unsigned integer.
std::optional<std::uint64_t> seed_from_environment();

/// %.17g, with `null` for non-finite values.
std::string format_real(double v);
/// Single-line JSON object for a trace record.
std::string trace_record_json(const IterationRecord& record);

int command_run(const std::string& config_path, std::ostream& out, std::ostream& err,
                std::optional<std::uint64_t> seed_override);
int command_verify(const std::string& config_path, std::ostream& out, std::ostream& err,
                   std::optional<std::uint64_t> seed_override);

struct GenDataOptions {
  SyntheticSpec spec;
  std::string out_path;
};
int command_gendata(const GenDataOptions& options, std::ostream& err);

/// Trace JSONL to CSV with columns k, err, sample_hess, sample_grad, eps_k, lambda_k.
int command_report(const std::string& trace_path, const std::string& out_path, std::ostream& out,
                   std::ostream& err);

}  // namespace subnewton::cli
