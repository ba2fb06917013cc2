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

#include "tinyfusion/report.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <system_error>

#include "json.hpp"
#include "tinyfusion/errors.hpp"

namespace tinyfusion {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return ss.str();
}

// Writes through a sibling temp file so a failure never leaves a truncated
// target behind.
bool write_file(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    out << content;
    out.close();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      return false;
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    return false;
  }
  return true;
}

ojson tool_json() { return ojson{{"name", "tinyfusion"}, {"version", kToolVersion}}; }

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

StatsReport compute_stats(const Dataset& d, const AnchorConfig& cfg, int max_objects,
                          bool include_zero_overlap, unsigned threads) {
  StatsReport r;
  r.max_objects = max_objects;
  r.include_zero_overlap = include_zero_overlap;
  r.anchor_config = cfg;

  const Dataset kept = filter_images(d, max_objects);
  r.dataset.images_total = static_cast<std::int64_t>(d.images.size());
  r.dataset.images = static_cast<std::int64_t>(kept.images.size());
  r.dataset.excluded_images = r.dataset.images_total - r.dataset.images;
  r.dataset.ground_truths = count_ground_truths(kept);
  r.dataset.ignored = static_cast<std::int64_t>(kept.annotations.size()) - r.dataset.ground_truths;

  CountOptions opts;
  opts.include_zero_overlap = include_zero_overlap;
  opts.threads = threads;
  r.level_counts = dataset_level_counts(kept, cfg, opts);
  r.dataset.zero_overlap = r.level_counts.zero_overlap;
  r.factors = compute_factors(r.level_counts);
  return r;
}

std::string stats_report_to_json(const StatsReport& r) {
  ojson j;
  j["schema_version"] = r.schema_version;
  j["tool"] = ojson{{"name", "tinyfusion"}, {"version", r.tool_version}};
  j["timestamp"] = r.timestamp;
  j["parameters"] = ojson{{"max_objects", r.max_objects}, {"include_zero_overlap", r.include_zero_overlap}};
  j["dataset"] = ojson{{"images_total", r.dataset.images_total},
                       {"images", r.dataset.images},
                       {"excluded_images", r.dataset.excluded_images},
                       {"ground_truths", r.dataset.ground_truths},
                       {"ignored", r.dataset.ignored},
                       {"zero_overlap", r.dataset.zero_overlap}};
  j["anchor_config"] = ojson::parse(anchor_config_to_json(r.anchor_config));
  j["level_counts"] = ojson{{"levels", r.level_counts.levels}, {"counts", r.level_counts.counts}};
  j["fusion_factors"] = ojson{{"alpha", r.factors.alpha}, {"fallback", r.factors.fallback}};
  return j.dump(2) + "\n";
}

StatsReport stats_report_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  StatsReport r;
  r.schema_version = j.at("schema_version").get<int>();
  r.tool_version = j.at("tool").at("version").get<std::string>();
  r.timestamp = j.at("timestamp").get<std::string>();
  r.max_objects = j.at("parameters").at("max_objects").get<int>();
  r.include_zero_overlap = j.at("parameters").at("include_zero_overlap").get<bool>();
  const auto& ds = j.at("dataset");
  r.dataset.images_total = ds.at("images_total").get<std::int64_t>();
  r.dataset.images = ds.at("images").get<std::int64_t>();
  r.dataset.excluded_images = ds.at("excluded_images").get<std::int64_t>();
  r.dataset.ground_truths = ds.at("ground_truths").get<std::int64_t>();
  r.dataset.ignored = ds.at("ignored").get<std::int64_t>();
  r.dataset.zero_overlap = ds.at("zero_overlap").get<std::int64_t>();
  r.anchor_config = anchor_config_from_json(j.at("anchor_config").dump());
  r.level_counts.levels = j.at("level_counts").at("levels").get<std::vector<int>>();
  r.level_counts.counts = j.at("level_counts").at("counts").get<std::vector<std::int64_t>>();
  r.level_counts.zero_overlap = r.dataset.zero_overlap;
  r.factors.alpha = j.at("fusion_factors").at("alpha").get<std::array<double, 3>>();
  r.factors.fallback = j.at("fusion_factors").at("fallback").get<std::array<bool, 3>>();
  return r;
}

std::string format_summary(const StatsReport& r) {
  std::ostringstream s;
  s << "images: " << r.dataset.images << " kept, " << r.dataset.excluded_images << " excluded (>= "
    << r.max_objects << " objects)\n";
  s << "ground truths: " << r.dataset.ground_truths << " (" << r.dataset.ignored << " ignore boxes skipped, "
    << r.dataset.zero_overlap << " without anchor overlap"
    << (r.include_zero_overlap ? ", counted" : ", not counted") << ")\n";
  s << "level counts:";
  for (std::size_t k = 0; k < r.level_counts.counts.size(); ++k) {
    s << " P" << r.level_counts.levels[k] << "=" << r.level_counts.counts[k];
  }
  s << "\n";
  static constexpr const char* names[] = {"alpha_2_3", "alpha_3_4", "alpha_4_5"};
  for (int i = 0; i < 3; ++i) {
    s << names[i] << " = " << fixed3(r.factors.alpha[i]) << (r.factors.fallback[i] ? " (fallback)" : "") << "\n";
  }
  return s.str();
}

std::string verify_report_to_json(const VerifyReport& r) {
  ojson checks = ojson::array();
  for (const auto& c : r.checks) {
    checks.push_back(ojson{{"name", c.name},
                           {"status", c.passed ? "pass" : "fail"},
                           {"measured_error", c.measured},
                           {"tolerance", c.tolerance},
                           {"seed", c.seed},
                           {"detail", c.detail}});
  }
  ojson j;
  j["schema_version"] = kSchemaVersion;
  j["tool"] = tool_json();
  j["timestamp"] = utc_timestamp();
  j["status"] = r.passed() ? "pass" : "fail";
  j["checks"] = std::move(checks);
  return j.dump(2) + "\n";
}

int cmd_stats(const StatsArgs& args, std::ostream& out, std::ostream& err) {
  const auto raw = read_file(args.annotations);
  if (!raw) {
    err << "error: cannot read annotations '" << args.annotations.string() << "'\n";
    return kExitIo;
  }
  const auto cfg_text = read_file(args.config);
  if (!cfg_text) {
    err << "error: cannot read config '" << args.config.string() << "'\n";
    return kExitIo;
  }
  if (args.max_objects < 1) {
    err << "error: --max-objects must be at least 1\n";
    return kExitConfig;
  }

  AnchorConfig cfg;
  try {
    cfg = anchor_config_from_json(*cfg_text);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (cfg.levels.size() != 5) {
    err << "error: anchor config: fusion factors need exactly five levels (P2..P6)\n";
    return kExitConfig;
  }

  Dataset d;
  try {
    d = parse_annotations(*raw);
  } catch (const ParseError& e) {
    err << "error: malformed annotations at byte " << e.offset() << ": " << e.what() << "\n";
    return kExitInvalidData;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidData;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidData;
  }

  const ValidationReport v = validate(d);
  for (const auto& f : v.findings) {
    err << (f.severity == Severity::kHard ? "error: " : "warning: ") << f.record << ": " << f.code << ": "
        << f.message << "\n";
  }
  if (!v.valid) return kExitInvalidData;

  StatsReport report;
  try {
    report = compute_stats(d, cfg, args.max_objects, args.include_zero_overlap, args.threads);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalidData;
  }
  report.timestamp = utc_timestamp();
  if (report.dataset.ground_truths == 0) {
    err << "warning: no ground truths after filtering; every fusion factor falls back to 1.0\n";
  }

  if (!write_file(args.out, stats_report_to_json(report))) {
    err << "error: cannot write report '" << args.out.string() << "'\n";
    return kExitIo;
  }
  if (args.alpha_out &&
      !write_file(*args.alpha_out, alpha_json(report.factors, report.level_counts.counts) + "\n")) {
    err << "error: cannot write '" << args.alpha_out->string() << "'\n";
    return kExitIo;
  }
  out << format_summary(report);
  return kExitOk;
}

int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err, const VerifyOptions& base) {
  VerifyOptions opts = base;
  opts.seed = args.seed;
  const VerifyReport report = run_verification(opts);
  for (const auto& c : report.checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << "  measured=" << c.measured << " tolerance=" << c.tolerance
        << "\n";
    if (!c.passed) {
      err << "check failed: " << c.name << " (seed " << c.seed << "): " << c.detail << ", measured " << c.measured
          << " > " << c.tolerance << "\n";
    }
  }
  if (!write_file(args.out, verify_report_to_json(report))) {
    err << "error: cannot write report '" << args.out.string() << "'\n";
    return kExitIo;
  }
  return report.passed() ? kExitOk : kExitCheckFailed;
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  SweepPlan plan;
  try {
    plan = sweep_plan(args.min, args.max, args.step);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  const auto base_text = read_file(args.base_config);
  if (!base_text) {
    err << "error: cannot read base config '" << args.base_config.string() << "'\n";
    return kExitIo;
  }
  ojson base;
  try {
    base = ojson::parse(*base_text);
  } catch (const ojson::parse_error& e) {
    err << "error: base config: " << e.what() << "\n";
    return kExitConfig;
  }
  if (!base.is_object()) {
    err << "error: base config must be a JSON object\n";
    return kExitConfig;
  }

  std::error_code ec;
  fs::create_directories(args.out_dir, ec);
  if (ec) {
    err << "error: cannot create '" << args.out_dir.string() << "': " << ec.message() << "\n";
    return kExitIo;
  }
  for (double a : plan.values) {
    ojson cfg = base;
    cfg["alpha"] = {a, a, a};
    const fs::path path = args.out_dir / ("alpha_" + format_alpha(a) + ".json");
    if (!write_file(path, cfg.dump(2) + "\n")) {
      err << "error: cannot write '" << path.string() << "'\n";
      return kExitIo;
    }
    out << path.string() << "\n";
  }
  return kExitOk;
}

}  // namespace tinyfusion
