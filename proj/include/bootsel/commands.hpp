// bootsel/commands.hpp

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

// Command implementations behind the bootsel tool.
//
// Exit codes: 0 success, 1 domain or validation error, 2 I/O error.
//
// Outputs under the run directory:
//   report.json        config, hash, version, per-run and aggregate metrics
//   report.md          the same as tables (UA/WA/F1 in percent)
//   rounds/*.json      one file per fold, seed and selection round
//   sweep.csv          per-iteration aggregates plus the oracle row

#pragma once

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bootsel/bootstrap.hpp"
#include "bootsel/common.hpp"
#include "bootsel/eval.hpp"
#include "bootsel/feature_io.hpp"
#include "bootsel/run_config.hpp"
#include "bootsel/synthbench.hpp"
#include "json.hpp"

namespace bootsel {

using ojson = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitIo = 2;

/// Runs `fn` and maps exceptions onto the exit-code contract.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations()) err << v.message() << '\n';
    return kExitDomain;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

// ---- report serialization ----

inline ojson to_json(const Metrics& m) {
  ojson j;
  j["ua"] = m.ua;
  j["wa"] = m.wa;
  j["f1"] = m.f1;
  ojson conf = ojson::array();
  for (const auto& row : m.confusion) conf.push_back(row);
  j["confusion"] = conf;
  return j;
}

inline ojson to_json(const MetricSummary& s) {
  ojson j;
  j["ua"] = s.ua;
  j["wa"] = s.wa;
  j["f1"] = s.f1;
  return j;
}

inline ojson runs_json(const std::vector<RunMetrics>& runs) {
  ojson arr = ojson::array();
  for (const auto& r : runs) {
    ojson j;
    j["fold"] = r.fold;
    j["seed"] = r.seed;
    j["metrics"] = to_json(r.metrics);
    arr.push_back(j);
  }
  return arr;
}

inline ojson aggregate_json(const MetricsReport& rep) {
  ojson j;
  j["mean"] = to_json(rep.mean);
  j["std"] = to_json(rep.stddev);
  return j;
}

inline ojson report_header(const std::string& command, const RunConfig& cfg) {
  ojson j;
  j["tool"] = "bootsel";
  j["version"] = kVersion;
  j["command"] = command;
  j["config_hash"] = config_hash(cfg);
  j["config"] = to_json(cfg);
  return j;
}

inline ojson round_json(const BootstrapRun& run, const SelectionRound& r) {
  ojson j;
  j["fold"] = run.spec.fold;
  j["seed"] = run.spec.seed;
  j["iteration"] = r.iteration;
  j["criterion"] = std::string(criterion_name(r.criterion));
  j["kept"] = r.kept;
  j["total"] = r.total;
  j["median_kl"] = r.median_kl ? ojson(*r.median_kl) : ojson(nullptr);
  ojson hist;
  hist["bins"] = kKlHistogramBins;
  hist["range"] = {0.0, kKlHistogramMax};
  hist["counts"] = r.kl_histogram();
  j["kl_histogram"] = hist;
  j["selected_ids"] = r.selected_ids;
  return j;
}

inline std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

/// Markdown view of a report.json document.
inline std::string render_markdown(const nlohmann::json& rep) {
  std::ostringstream md;
  auto row = [&](const std::string& label, const nlohmann::json& agg) {
    const auto& m = agg.at("mean");
    const auto& s = agg.at("std");
    md << "| " << label << " | " << pct(m.at("ua")) << " ± " << pct(s.at("ua")) << " | " << pct(m.at("wa")) << " ± "
       << pct(s.at("wa")) << " | " << pct(m.at("f1")) << " ± " << pct(s.at("f1")) << " |\n";
  };
  md << "# bootsel " << rep.at("command").get<std::string>() << "\n\n";
  md << "version " << rep.at("version").get<std::string>() << ", config hash `"
     << rep.at("config_hash").get<std::string>() << "`\n\n";
  md << "|  | UA | WA | F1 |\n|---|---|---|---|\n";
  if (rep.contains("iterations")) {
    for (const auto& it : rep.at("iterations"))
      row("iteration " + std::to_string(it.at("iteration").get<std::size_t>()), it.at("aggregate"));
    if (rep.contains("oracle")) row("oracle", rep.at("oracle"));
  } else {
    row("mean ± std", rep.at("aggregate"));
  }
  const nlohmann::json& runs =
      rep.contains("iterations") ? rep.at("iterations").back().at("runs") : rep.at("runs");
  md << "\n## Runs\n\n| fold | seed | UA | WA | F1 |\n|---|---|---|---|---|\n";
  for (const auto& r : runs) {
    const auto& m = r.at("metrics");
    md << "| " << r.at("fold").get<std::size_t>() << " | " << r.at("seed").get<std::uint64_t>() << " | "
       << pct(m.at("ua")) << " | " << pct(m.at("wa")) << " | " << pct(m.at("f1")) << " |\n";
  }
  if (rep.contains("selection")) {
    md << "\n## Selection\n\n| iteration | mean kept | total |\n|---|---|---|\n";
    for (const auto& s : rep.at("selection")) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f", s.at("mean_kept").get<double>());
      md << "| " << s.at("iteration").get<std::size_t>() << " | " << buf << " | " << s.at("total").get<std::size_t>()
         << " |\n";
    }
  }
  if (rep.contains("warnings") && !rep.at("warnings").empty()) {
    md << "\n## Warnings\n\n";
    for (const auto& w : rep.at("warnings")) md << "- " << w.get<std::string>() << "\n";
  }
  return md.str();
}

inline void write_report(const fs::path& dir, const ojson& rep) {
  fs::create_directories(dir);
  detail::write_file_atomic(dir / "report.json", rep.dump(2) + "\n");
  detail::write_file_atomic(dir / "report.md", render_markdown(nlohmann::json::parse(rep.dump())));
}

// ---- data loading ----

struct LoadedData {
  Dataset target;
  Dataset synthetic;
  std::vector<std::string> warnings;
};

/// Target set plus the language-filtered synthesized set. Without an
/// explicit language the target set's own tag is used when it is unique.
inline LoadedData load_inputs(const RunConfig& cfg, bool need_synthetic) {
  LoadedData d{load_manifest(cfg.target_manifest), Dataset("synthetic", 0, {}), {}};
  if (!need_synthetic) return d;
  if (!cfg.synthetic_manifest) throw DomainError("config: \"synthetic_manifest\" is required for this command");
  Dataset syn = load_manifest(*cfg.synthetic_manifest);
  if (syn.feature_dim() != d.target.feature_dim() && !syn.empty() && !d.target.empty())
    throw DomainError("synthetic manifest: feature dimension mismatch (" + std::to_string(syn.feature_dim()) +
                      " vs target " + std::to_string(d.target.feature_dim()) + ")");
  std::optional<std::string> lang = cfg.language;
  if (!lang) {
    std::set<std::string> langs;
    for (const auto& s : d.target) langs.insert(s.language);
    if (langs.size() == 1) lang = *langs.begin();
  }
  if (lang) {
    auto f = filter_by_language(syn, *lang);
    if (f.dropped > 0)
      d.warnings.push_back("language filter dropped " + std::to_string(f.dropped) + " of " +
                           std::to_string(syn.size()) + " synthesized samples not tagged \"" + *lang + "\"");
    syn = std::move(f.dataset);
  }
  if (syn.empty()) d.warnings.push_back("no synthesized samples left after filtering");
  d.synthetic = Dataset(syn.name(), d.target.feature_dim(), std::vector<LabeledSample>(syn.begin(), syn.end()));
  return d;
}

// ---- commands ----

inline int cmd_validate(const fs::path& manifest, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Dataset ds = parse_manifest(manifest);
    auto violations = validate_dataset(ds);
    for (const auto& v : violations) out << v.message() << '\n';
    if (!violations.empty()) return kExitDomain;
    out << "ok: " << ds.size() << " samples, dimension " << ds.feature_dim() << '\n';
    return kExitOk;
  });
}

inline ojson run_baseline(const RunConfig& cfg) {
  const bool synthetic = cfg.augment.kind == AugmentKind::kSynthetic;
  LoadedData data = load_inputs(cfg, synthetic);
  CvOptions opts;
  opts.jobs = cfg.jobs;
  if (synthetic && !data.synthetic.empty()) opts.extra_train = &data.synthetic;
  if (cfg.augment.kind == AugmentKind::kNoise)
    opts.augment = [&](const Dataset& ds, std::uint64_t seed) {
      return noise_augment(ds, cfg.augment.sigma, cfg.augment.copies, seed);
    };
  if (cfg.augment.kind == AugmentKind::kCopyPaste)
    opts.augment = [&](const Dataset& ds, std::uint64_t seed) {
      return copypaste_augment(ds, cfg.augment.copies, seed);
    };
  MetricsReport rep = cross_validate(data.target, cfg.train, cfg.folds, cfg.seeds, opts);
  ojson j = report_header("baseline", cfg);
  j["aggregate"] = aggregate_json(rep);
  j["runs"] = runs_json(rep.runs);
  j["warnings"] = data.warnings;
  return j;
}

struct BootstrapOutput {
  ojson report;
  std::map<std::string, ojson> rounds;  // file name -> document
  BootstrapReport raw;
};

inline BootstrapOutput run_bootstrap(const RunConfig& cfg, const std::string& command) {
  LoadedData data = load_inputs(cfg, true);
  BootstrapOutput out;
  out.raw = cross_validate_bootstrap(data.target, data.synthetic, cfg.train, cfg.folds, cfg.seeds, cfg.iterations,
                                     cfg.criterion, cfg.jobs);
  ojson j = report_header(command, cfg);
  ojson iters = ojson::array();
  for (std::size_t i = 0; i < out.raw.per_iteration.size(); ++i) {
    ojson it;
    it["iteration"] = i;
    it["aggregate"] = aggregate_json(out.raw.per_iteration[i]);
    it["runs"] = runs_json(out.raw.per_iteration[i].runs);
    iters.push_back(it);
  }
  j["iterations"] = iters;
  j["final"] = aggregate_json(out.raw.final_report());
  j["oracle"] = aggregate_json(out.raw.oracle);

  ojson selection = ojson::array();
  for (std::size_t i = 0; i < cfg.iterations; ++i) {
    double kept = 0;
    std::size_t total = data.synthetic.size();
    for (const auto& run : out.raw.runs) kept += static_cast<double>(run.rounds[i].kept);
    ojson s;
    s["iteration"] = i;
    s["mean_kept"] = out.raw.runs.empty() ? 0.0 : kept / static_cast<double>(out.raw.runs.size());
    s["total"] = total;
    selection.push_back(s);
  }
  j["selection"] = selection;

  std::vector<std::string> warnings = data.warnings;
  std::set<std::string> seen(warnings.begin(), warnings.end());
  for (const auto& run : out.raw.runs)
    for (const auto& w : run.warnings) {
      std::string msg = "fold " + std::to_string(run.spec.fold) + ", seed " + std::to_string(run.spec.seed) + ": " + w;
      if (seen.insert(msg).second) warnings.push_back(msg);
    }
  j["warnings"] = warnings;
  out.report = std::move(j);

  for (const auto& run : out.raw.runs)
    for (const auto& r : run.rounds) {
      char name[96];
      std::snprintf(name, sizeof name, "fold%zu_seed%llu_iter%zu.json", run.spec.fold,
                    static_cast<unsigned long long>(run.spec.seed), r.iteration);
      out.rounds[name] = round_json(run, r);
    }
  return out;
}

inline void write_rounds(const fs::path& dir, const std::map<std::string, ojson>& rounds) {
  if (rounds.empty()) return;
  fs::create_directories(dir / "rounds");
  for (const auto& [name, doc] : rounds) detail::write_file_atomic(dir / "rounds" / name, doc.dump(2) + "\n");
}

inline std::string sweep_csv(const BootstrapReport& rep) {
  std::ostringstream csv;
  csv << "iteration,ua_mean,ua_std,wa_mean,wa_std,f1_mean,f1_std\n";
  auto line = [&](const std::string& label, const MetricsReport& r) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", label.c_str(), r.mean.ua, r.stddev.ua,
                  r.mean.wa, r.stddev.wa, r.mean.f1, r.stddev.f1);
    csv << buf;
  };
  for (std::size_t i = 0; i < rep.per_iteration.size(); ++i) line(std::to_string(i), rep.per_iteration[i]);
  line("oracle", rep.oracle);
  return csv.str();
}

inline void print_summary(std::ostream& out, const std::string& label, const MetricSummary& m) {
  out << label << ": UA " << pct(m.ua) << "  WA " << pct(m.wa) << "  F1 " << pct(m.f1) << '\n';
}

inline int cmd_baseline(const fs::path& config, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = apply_overrides(load_run_config(config), ov);
    ojson rep = run_baseline(cfg);
    write_report(cfg.out, rep);
    for (const auto& w : rep["warnings"]) err << "warning: " << w.get<std::string>() << '\n';
    MetricSummary m{rep["aggregate"]["mean"]["ua"], rep["aggregate"]["mean"]["wa"], rep["aggregate"]["mean"]["f1"]};
    print_summary(out, "baseline", m);
    return kExitOk;
  });
}

inline int cmd_bootstrap(const fs::path& config, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = apply_overrides(load_run_config(config), ov);
    BootstrapOutput res = run_bootstrap(cfg, "bootstrap");
    write_report(cfg.out, res.report);
    write_rounds(cfg.out, res.rounds);
    for (const auto& w : res.report["warnings"]) err << "warning: " << w.get<std::string>() << '\n';
    for (std::size_t i = 0; i < res.raw.per_iteration.size(); ++i)
      print_summary(out, "iteration " + std::to_string(i), res.raw.per_iteration[i].mean);
    return kExitOk;
  });
}

inline int cmd_sweep(const fs::path& config, const Overrides& ov, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig cfg = apply_overrides(load_run_config(config), ov);
    BootstrapOutput res = run_bootstrap(cfg, "sweep");
    write_report(cfg.out, res.report);
    write_rounds(cfg.out, res.rounds);
    detail::write_file_atomic(cfg.out / "sweep.csv", sweep_csv(res.raw));
    for (const auto& w : res.report["warnings"]) err << "warning: " << w.get<std::string>() << '\n';
    out << sweep_csv(res.raw);
    return kExitOk;
  });
}

/// Writes target.jsonl, synthetic.jsonl, the feature files, the provenance
/// tags, the bench config used and a run config pointing at the manifests.
inline void write_benchmark(const Benchmark& bench, const BenchConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  write_manifest(bench.target, dir, "target.jsonl");
  write_manifest(bench.synthetic, dir, "synthetic.jsonl");
  ojson prov;
  for (const auto& s : bench.synthetic) prov[s.id] = std::string(provenance_name(bench.provenance.at(s.id)));
  detail::write_file_atomic(dir / "provenance.json", prov.dump(2) + "\n");
  ojson bc;
  bc["feature_dim"] = cfg.feature_dim;
  bc["frames"] = cfg.frames;
  bc["separation"] = cfg.separation;
  bc["sigma"] = cfg.sigma;
  bc["speaker_sigma"] = cfg.speaker_sigma;
  bc["n_target"] = cfg.n_target;
  bc["n_synthetic"] = cfg.n_synthetic;
  bc["clean_fraction"] = cfg.clean_fraction;
  bc["shift"] = cfg.shift;
  bc["shift_alignment"] = cfg.shift_alignment;
  bc["label_corruption"] = cfg.label_corruption;
  bc["annotators"] = cfg.annotators;
  bc["dissent"] = cfg.dissent;
  bc["smoothing_alpha"] = cfg.smoothing_alpha;
  bc["target_speakers"] = cfg.target_speakers;
  bc["synthetic_speakers"] = cfg.synthetic_speakers;
  bc["target_language"] = cfg.target_language;
  bc["source_language"] = cfg.source_language;
  bc["off_language_fraction"] = cfg.off_language_fraction;
  bc["seed"] = cfg.seed;
  detail::write_file_atomic(dir / "bench_config.json", bc.dump(2) + "\n");
  ojson run;
  run["target_manifest"] = "target.jsonl";
  run["synthetic_manifest"] = "synthetic.jsonl";
  run["language"] = cfg.target_language;
  run["criterion"] = "chi2";
  run["iterations"] = 2;
  run["folds"] = 2;
  run["seeds"] = {0, 1, 2};
  run["out"] = "run";
  detail::write_file_atomic(dir / "run.json", run.dump(2) + "\n");
}

/// `config` may be empty for the default benchmark.
inline int cmd_synthgen(const fs::path& config, std::optional<std::uint64_t> seed, const fs::path& out_dir,
                        std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    BenchConfig cfg = config.empty() ? BenchConfig{} : load_bench_config(config);
    if (seed) cfg.seed = *seed;
    cfg.check();
    Benchmark bench = generate(cfg);
    write_benchmark(bench, cfg, out_dir);
    out << "wrote " << bench.target.size() << " target and " << bench.synthetic.size() << " synthesized samples to "
        << out_dir.string() << '\n';
    return kExitOk;
  });
}

/// Re-renders report.md from report.json and prints it.
inline int cmd_report(const fs::path& run_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    nlohmann::json rep;
    try {
      rep = nlohmann::json::parse(detail::read_file(run_dir / "report.json"));
    } catch (const nlohmann::json::parse_error& e) {
      throw DomainError((run_dir / "report.json").string() + ": malformed JSON");
    }
    std::string md = render_markdown(rep);
    detail::write_file_atomic(run_dir / "report.md", md);
    out << md;
    return kExitOk;
  });
}

}  // namespace bootsel
