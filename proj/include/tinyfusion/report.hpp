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

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tinyfusion/anchors.hpp"
#include "tinyfusion/assignment.hpp"
#include "tinyfusion/dataset.hpp"
#include "tinyfusion/fusion_factor.hpp"
#include "tinyfusion/verify.hpp"

namespace tinyfusion {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kDefaultMaxObjects = 200;

// Process exit codes. Stable: scripts depend on them.
enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitIo = 2,
  kExitInvalidData = 3,
  kExitConfig = 4,
};

struct DatasetSummary {
  std::int64_t images_total = 0;     // before filtering
  std::int64_t images = 0;           // after filtering
  std::int64_t excluded_images = 0;
  std::int64_t ground_truths = 0;    // non-ignore, after filtering
  std::int64_t ignored = 0;          // ignore boxes on kept images
  std::int64_t zero_overlap = 0;

  friend bool operator==(const DatasetSummary&, const DatasetSummary&) = default;
};

struct StatsReport {
  int schema_version = kSchemaVersion;
  std::string tool_version = kToolVersion;
  std::string timestamp;
  int max_objects = kDefaultMaxObjects;
  bool include_zero_overlap = false;
  DatasetSummary dataset;
  AnchorConfig anchor_config;
  LevelCounts level_counts;
  FusionFactors factors;

  friend bool operator==(const StatsReport&, const StatsReport&) = default;
};

// Pure pipeline: filter -> count -> factors. The timestamp is left empty.
StatsReport compute_stats(const Dataset& d, const AnchorConfig& cfg, int max_objects,
                          bool include_zero_overlap, unsigned threads = 0);

std::string stats_report_to_json(const StatsReport& r);
StatsReport stats_report_from_json(const std::string& text);

// Multi-line human summary; alphas rounded to three decimals.
std::string format_summary(const StatsReport& r);

std::string verify_report_to_json(const VerifyReport& r);

std::string utc_timestamp();

struct StatsArgs {
  std::filesystem::path annotations;
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::filesystem::path> alpha_out;
  int max_objects = kDefaultMaxObjects;
  bool include_zero_overlap = false;
  unsigned threads = 0;
};

struct SweepArgs {
  double min = 0.0;
  double max = 1.1;
  double step = 0.1;
  std::filesystem::path base_config;
  std::filesystem::path out_dir;
};

struct VerifyArgs {
  std::uint64_t seed = VerifyOptions{}.seed;
  std::filesystem::path out;
};

// Command bodies. Summaries go to `out`, diagnostics to `err`; the return
// value is an ExitCode.
int cmd_stats(const StatsArgs& args, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err,
               const VerifyOptions& base = {});
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);

}  // namespace tinyfusion
