#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "subnewton/cli.hpp"
#include "subnewton/error.hpp"

int main(int argc, char** argv) {
  using namespace subnewton;
  CLI::App app{"Sub-sampled Newton solvers and verification harness"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Run a configured solver and write its trace");
  run->add_option("config", config, "JSON config file")->required();
  auto* verify = app.add_subcommand("verify", "Run the configured verification checks");
  verify->add_option("config", config, "JSON config file")->required();

  cli::GenDataOptions gen;
  std::string kind = "logistic";
  auto* gendata = app.add_subcommand("gen-data", "Write a synthetic dataset as CSV");
  gendata->add_option("--kind", kind, "ols, logistic, poisson or svm");
  gendata->add_option("--n", gen.spec.n, "number of records")->check(CLI::PositiveNumber);
  gendata->add_option("--p", gen.spec.p, "number of features")->check(CLI::PositiveNumber);
  gendata->add_option("--seed", gen.spec.seed, "generator seed");
  gendata->add_option("--conditioning", gen.spec.conditioning, "feature scale ratio (>= 1)");
  gendata->add_option("--out", gen.out_path, "output CSV path")->required();

  std::string trace, table;
  auto* report = app.add_subcommand("report", "Render a trace as a CSV table");
  report->add_option("trace", trace, "JSONL trace file")->required();
  report->add_option("--out", table, "CSV output path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  std::optional<std::uint64_t> seed;
  try {
    seed = cli::seed_from_environment();
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return cli::kExitConfig;
  }

  if (*run) return cli::command_run(config, std::cout, std::cerr, seed);
  if (*verify) return cli::command_verify(config, std::cout, std::cerr, seed);
  if (*gendata) {
    try {
      gen.spec.kind = parse_objective_kind(kind);
    } catch (const Error& e) {
      std::cerr << e.what() << "\n";
      return cli::kExitConfig;
    }
    return cli::command_gendata(gen, std::cerr);
  }
  return cli::command_report(trace, table, std::cout, std::cerr);
}
