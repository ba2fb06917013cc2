// Copyright 2026 The tinyfusion Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: statistic fusion factors from annotations, the
// micro-FPN verification suite, and uniform-alpha sweep configs.
//
// Usage:
//   tinyfusion stats --annotations train.json --config anchors.json --out stats.json
//   tinyfusion verify --seed 7 --out verify.json
//   tinyfusion sweep --min 0 --max 1.1 --step 0.1 --base-config base.json --out-dir runs/

#include <iostream>

#include "CLI11.hpp"
#include "tinyfusion/report.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Statistic-based FPN fusion factors for tiny object detection"};
  app.require_subcommand(1);

  tinyfusion::StatsArgs stats;
  std::string alpha_out;
  auto* stats_cmd = app.add_subcommand("stats", "Compute per-level object counts and fusion factors");
  stats_cmd->add_option("--annotations", stats.annotations, "Annotation JSON file")->required();
  stats_cmd->add_option("--config", stats.config, "Anchor config JSON file")->required();
  stats_cmd->add_option("--max-objects", stats.max_objects,
                        "Keep images with fewer than this many non-ignore boxes")
      ->capture_default_str();
  stats_cmd->add_option("--out", stats.out, "Report JSON output path")->required();
  stats_cmd->add_option("--alpha-out", alpha_out, "Also write the standalone alpha.json here");
  stats_cmd->add_flag("--include-zero-overlap", stats.include_zero_overlap,
                      "Count boxes that overlap no anchor at their argmax level");
  stats_cmd->add_option("--threads", stats.threads, "Worker threads (0: all cores)")->capture_default_str();

  tinyfusion::VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify", "Run the micro-FPN invariant checks");
  verify_cmd->add_option("--seed", verify.seed, "Seed of the first random instance")->capture_default_str();
  verify_cmd->add_option("--out", verify.out, "Report JSON output path")->required();

  tinyfusion::SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Write one config per uniform alpha value");
  sweep_cmd->add_option("--min", sweep.min, "Smallest alpha")->required();
  sweep_cmd->add_option("--max", sweep.max, "Largest alpha (at most 1.1)")->required();
  sweep_cmd->add_option("--step", sweep.step, "Increment")->required();
  sweep_cmd->add_option("--base-config", sweep.base_config, "JSON object copied into every run")->required();
  sweep_cmd->add_option("--out-dir", sweep.out_dir, "Destination directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*stats_cmd) {
    if (!alpha_out.empty()) stats.alpha_out = alpha_out;
    return tinyfusion::cmd_stats(stats, std::cout, std::cerr);
  }
  if (*verify_cmd) return tinyfusion::cmd_verify(verify, std::cout, std::cerr);
  return tinyfusion::cmd_sweep(sweep, std::cout, std::cerr);
}
