// tools/bootsel.cpp

// Copyright 2026 The bootsel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bootsel/commands.hpp"

namespace {

const char* kUsage =
    "Bootstrapped selection of synthesized training data for speech emotion\n"
    "recognition, with speaker-aware cross-validation.\n"
    "\n"
    "Usage:  bootsel validate <manifest.jsonl>\n"
    "        bootsel baseline  --config run.json [overrides]\n"
    "        bootsel bootstrap --config run.json [overrides]\n"
    "        bootsel sweep     --config run.json --iterations 4 [overrides]\n"
    "        bootsel synthgen  [--config bench.json] [--seed N] --out dir\n"
    "        bootsel report    <run-dir>\n"
    "e.g.:\n"
    "  bootsel synthgen --out bench && bootsel bootstrap --config bench/run.json\n";

struct RunFlags {
  std::string config;
  std::string criterion;
  std::optional<std::size_t> iterations, folds, jobs;
  std::vector<std::uint64_t> seeds;
  std::string out;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "run config (JSON)")->required();
    app->add_option("--criterion", criterion, "selection criterion")->check(CLI::IsMember({"chi1", "chi2"}));
    app->add_option("--iterations", iterations, "bootstrap rounds (sweep: maximum)");
    app->add_option("--folds", folds, "cross-validation folds");
    app->add_option("--seeds", seeds, "seed list, e.g. --seeds 0 1 2")->delimiter(',');
    app->add_option("--jobs", jobs, "parallel fold x seed runs");
    app->add_option("--out", out, "output directory");
  }

  bootsel::Overrides overrides() const {
    bootsel::Overrides o;
    if (!criterion.empty()) o.criterion = bootsel::parse_criterion(criterion);
    o.iterations = iterations;
    o.folds = folds;
    o.jobs = jobs;
    if (!seeds.empty()) o.seeds = seeds;
    if (!out.empty()) o.out = out;
    return o;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{kUsage, "bootsel"};
  app.set_version_flag("--version", std::string(bootsel::kVersion));
  app.require_subcommand(1);

  std::string manifest;
  auto* validate = app.add_subcommand("validate", "check a manifest and its feature files");
  validate->add_option("manifest", manifest, "manifest (JSONL)")->required();

  RunFlags baseline_flags, bootstrap_flags, sweep_flags;
  baseline_flags.attach(app.add_subcommand("baseline", "cross-validate on target data only"));
  bootstrap_flags.attach(app.add_subcommand("bootstrap", "bootstrapped selection and retraining"));
  sweep_flags.attach(app.add_subcommand("sweep", "metrics at every iteration 0..I plus the per-run best"));

  std::string bench_config, bench_out;
  std::optional<std::uint64_t> bench_seed;
  auto* synthgen = app.add_subcommand("synthgen", "write a synthetic benchmark as manifests");
  synthgen->add_option("--config", bench_config, "bench config (JSON)");
  synthgen->add_option("--seed", bench_seed, "benchmark seed");
  synthgen->add_option("--out", bench_out, "output directory")->required();

  std::string report_dir;
  auto* report = app.add_subcommand("report", "print report.md for a run directory");
  report->add_option("dir", report_dir, "run directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : bootsel::kExitDomain;
  }

  auto* sub = app.get_subcommands().front();
  if (sub == validate) return bootsel::cmd_validate(manifest, std::cout, std::cerr);
  if (sub->get_name() == "baseline")
    return bootsel::cmd_baseline(baseline_flags.config, baseline_flags.overrides(), std::cout, std::cerr);
  if (sub->get_name() == "bootstrap")
    return bootsel::cmd_bootstrap(bootstrap_flags.config, bootstrap_flags.overrides(), std::cout, std::cerr);
  if (sub->get_name() == "sweep")
    return bootsel::cmd_sweep(sweep_flags.config, sweep_flags.overrides(), std::cout, std::cerr);
  if (sub == synthgen) return bootsel::cmd_synthgen(bench_config, bench_seed, bench_out, std::cout, std::cerr);
  return bootsel::cmd_report(report_dir, std::cout, std::cerr);
}
