// Copyright 2026 The qillum Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qillum/runner.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "qillum/errors.hpp"
#include "qillum/fileio.hpp"

namespace qillum {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.17g}", v);
}

std::vector<double> sweep_axis(const ExperimentConfig& config) {
  if (!config.sweep_distances_m.empty()) return config.sweep_distances_m;
  return {config.plan.link.object_distance};
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string counts_csv(const ProtocolResult& r) {
  CsvTable t;
  t.header = {"path", "alpha_deg", "beta_deg", "n_ab", "n_ab_perp", "n_aperp_b", "n_aperp_bperp"};
  auto add = [&t](const char* path, const std::array<SettingCounts, 4>& counts) {
    for (const auto& c : counts)
      t.rows.push_back({path, num(c.setting.alpha_deg), num(c.setting.beta_deg), std::to_string(c.n_ab),
                        std::to_string(c.n_ab_perp), std::to_string(c.n_aperp_b), std::to_string(c.n_aperp_bperp)});
  };
  add("reference", r.reference_counts);
  if (r.probe) add("probe", r.probe_counts);
  return t.to_string();
}

std::string range_report(const ProtocolResult& r) {
  if (!r.range) return "status = no_peak\n";
  const auto& g = *r.range;
  return fmt::format(
      "status = peak\npeak_delay_ps = {:.17g}\nroundtrip_length_m = {:.17g}\nobject_distance_m = {:.17g}\n"
      "peak_counts = {}\npeak_bin = {}\nbackground_mean = {:.17g}\nbackground_std = {:.17g}\nsignificance = {:.17g}\n",
      g.peak_delay_ps, g.roundtrip_length_m, g.object_distance_m, g.peak_counts, g.peak_bin, g.background_mean,
      g.background_std, g.significance);
}

}  // namespace

std::string RunManifest::to_text() const {
  std::string out = "# qillum run manifest\nformat = 1\n";
  out += fmt::format("config_hash = {}\nseed = {}\nduration_per_setting_s = {:.17g}\nports = {}\nsetting_count = {}\n",
                     config_hash, seed, duration_per_setting_s, ports, entries.size());
  for (const auto& e : entries)
    out += fmt::format("setting = {:.17g} {:.17g} {} {} {}\n", e.setting.alpha_deg, e.setting.beta_deg, e.seed,
                       e.records, e.file);
  return out;
}

RunManifest RunManifest::parse(std::string_view text) {
  RunManifest m;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t declared = 0;
  int line_no = 0;
  bool have_format = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("manifest line {}: expected key = value", line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "format") {
        if (value != "1") throw ConfigError(fmt::format("manifest line {}: unsupported format {}", line_no, value));
        have_format = true;
      } else if (key == "config_hash") {
        m.config_hash = value;
      } else if (key == "seed") {
        m.seed = std::stoull(value);
      } else if (key == "duration_per_setting_s") {
        m.duration_per_setting_s = std::stod(value);
      } else if (key == "ports") {
        m.ports = value;
      } else if (key == "setting_count") {
        declared = std::stoull(value);
      } else if (key == "setting") {
        std::istringstream row(value);
        ManifestEntry e;
        if (!(row >> e.setting.alpha_deg >> e.setting.beta_deg >> e.seed >> e.records >> e.file))
          throw ConfigError(fmt::format("manifest line {}: malformed setting entry", line_no));
        m.entries.push_back(e);
      } else {
        throw ConfigError(fmt::format("manifest line {}: unknown key '{}'", line_no, key));
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const ConfigError*>(&e)) throw;
      throw ConfigError(fmt::format("manifest line {}: bad value '{}'", line_no, value));
    }
  }
  if (!have_format) throw ConfigError("manifest lacks 'format = 1'");
  if (declared != m.entries.size())
    throw ConfigError(fmt::format("manifest declares {} settings but lists {}", declared, m.entries.size()));
  return m;
}

CsvTable cmd_linkbudget(const ExperimentConfig& config) {
  const ExperimentPlan& plan = config.plan;
  const double launched = plan.source.pair_rate * plan.bs_probe_fraction;
  CsvTable t;
  t.header = {"distance_m", "beam_diameter_object_mm", "beam_diameter_receiver_mm"};
  bool first = true;
  for (const double d : sweep_axis(config)) {
    LinkModel link = plan.link;
    link.object_distance = d;
    const LossBreakdown loss = end_to_end_transmission(link);
    if (first) {
      for (const auto& s : loss.stages) t.header.push_back(s.name);
      t.header.insert(t.header.end(), {"total_transmission", "launched_rate", "predicted_rate"});
      first = false;
    }
    std::vector<std::string> row{num(d), num(beam_diameter_at(link.sender, link.wavelength, d) * 1e3),
                                 num(beam_diameter_at(link.sender, link.wavelength, link.roundtrip_length()) * 1e3)};
    for (const auto& s : loss.stages) row.push_back(num(s.factor));
    row.push_back(num(loss.total));
    row.push_back(num(launched));
    row.push_back(num(predict_received_rate(launched, link)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

RunManifest cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  const RunBundle bundle = simulate_run(config.plan, config.workers);
  RunManifest m;
  m.config_hash = config_hash(config);
  m.seed = config.plan.seed;
  m.duration_per_setting_s = config.plan.duration_per_setting_s;
  m.ports = config.analysis.ports == PortConvention::both_ports ? "both_ports" : "transmitted_only";
  for (std::size_t i = 0; i < bundle.runs.size(); ++i) {
    const auto& run = bundle.runs[i];
    ManifestEntry e{run.setting, run.seed, run.tags.size(), fmt::format("tags/setting_{:02}.qtt1", i)};
    write_qtt1_file(out_dir / e.file, run.tags);
    m.entries.push_back(e);
  }
  write_file_atomic(out_dir / kManifestName, m.to_text());
  return m;
}

RunBundle load_run(const std::filesystem::path& run_dir, RunManifest* manifest_out) {
  const RunManifest m = RunManifest::parse(read_file(run_dir / kManifestName));
  RunBundle bundle;
  bundle.duration_per_setting_s = m.duration_per_setting_s;
  for (const auto& e : m.entries) {
    SettingRun run;
    run.setting = e.setting;
    run.seed = e.seed;
    run.tags = read_qtt1_file(run_dir / e.file);
    if (run.tags.size() != e.records)
      throw TagFormatError(fmt::format("{} holds {} records, manifest says {}", e.file, run.tags.size(), e.records),
                           kQtt1HeaderSize);
    bundle.runs.push_back(std::move(run));
  }
  if (manifest_out) *manifest_out = m;
  return bundle;
}

AnalyzeOutcome analyze_and_write(const RunBundle& bundle, const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir) {
  AnalyzeOutcome out;
  try {
    out.result = analyze_bundle(bundle, config.plan, config.analysis);
  } catch (const UndefinedCorrelationError& e) {
    out.exit_code = ExitCode::undefined_correlation;
    out.message = e.what();
    write_file_atomic(out_dir / "report.txt", fmt::format("status = undefined_correlation\n{}\n", e.what()));
    return out;
  }
  const ProtocolResult& r = out.result;
  write_file_atomic(out_dir / "probe_idler_histogram.csv", r.probe_histogram.to_csv());
  write_file_atomic(out_dir / "reference_idler_histogram.csv", r.reference_histogram.to_csv());
  write_file_atomic(out_dir / "chsh_reference.csv", chsh_to_csv(r.reference));
  if (r.probe) write_file_atomic(out_dir / "chsh_probe.csv", chsh_to_csv(*r.probe));
  write_file_atomic(out_dir / "counts.csv", counts_csv(r));
  write_file_atomic(out_dir / "range.txt", range_report(r));
  write_file_atomic(out_dir / "report.txt", protocol_report(r));
  if (!r.range) {
    out.exit_code = ExitCode::no_peak;
    out.message = "no probe-idler coincidence peak above the significance threshold";
  }
  return out;
}

AnalyzeOutcome cmd_analyze(const ExperimentConfig& config, const std::filesystem::path& run_dir,
                           const std::filesystem::path& out_dir) {
  RunManifest manifest;
  const RunBundle bundle = load_run(run_dir, &manifest);
  AnalyzeOutcome out = analyze_and_write(bundle, config, out_dir);
  if (manifest.config_hash != config_hash(config) && out.message.empty())
    out.message = "note: configuration differs from the one recorded in the run manifest";
  return out;
}

CsvTable cmd_sweep(const ExperimentConfig& config) {
  const std::vector<double> distances = sweep_axis(config);
  CsvTable t;
  t.header = {"distance_m",       "transmitted_rate", "predicted_received_rate", "simulated_received_rate",
              "probe_singles_rate", "coincidence_rate", "s_probe",               "ds_probe",
              "s_reference",      "ds_reference",     "detected",                "recovered_distance_m",
              "reflectivity_estimate"};
  t.rows.resize(distances.size());

  auto point = [&config](double distance) {
    ExperimentPlan plan = config.plan;
    plan.link.object_distance = distance;
    const RunBundle bundle = simulate_run(plan, 1);

    RunStats stats;
    std::uint64_t probe_singles = 0;
    for (const auto& run : bundle.runs) {
      stats.probe_launched += run.stats.probe_launched;
      stats.probe_returned += run.stats.probe_returned;
      probe_singles += channel_timestamps(run.tags, Channel::probe).size();
    }
    const double total_time = plan.duration_per_setting_s * static_cast<double>(bundle.runs.size());
    const double nominal_launch = plan.source.pair_rate * plan.bs_probe_fraction;
    LinkModel aligned = plan.link;
    aligned.pointing_rms = 0.0;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    double s_probe = nan, ds_probe = nan, s_ref = nan, ds_ref = nan, recovered = nan, coincidences = 0.0;
    bool detected = false;
    try {
      const ProtocolResult r = analyze_bundle(bundle, plan, config.analysis);
      s_ref = r.reference.s_value;
      ds_ref = r.reference.s_uncertainty;
      if (r.probe) {
        s_probe = r.probe->s_value;
        ds_probe = r.probe->s_uncertainty;
        detected = r.probe->detected;
        for (const auto& c : r.probe_counts) coincidences += static_cast<double>(c.total());
      }
      if (r.range) recovered = r.range->object_distance_m;
    } catch (const UndefinedCorrelationError&) {
    }

    const double transmitted = static_cast<double>(stats.probe_launched) / total_time;
    const double received = static_cast<double>(stats.probe_returned) / total_time;
    double reflectivity = nan;
    if (transmitted > 0) reflectivity = infer_reflectivity(received, transmitted, aligned).unclamped;

    return std::vector<std::string>{num(distance),
                                    num(transmitted),
                                    num(predict_received_rate(nominal_launch, aligned)),
                                    num(received),
                                    num(static_cast<double>(probe_singles) / total_time),
                                    num(coincidences / total_time),
                                    num(s_probe),
                                    num(ds_probe),
                                    num(s_ref),
                                    num(ds_ref),
                                    detected ? "true" : "false",
                                    num(recovered),
                                    num(reflectivity)};
  };

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const unsigned n_threads = std::max(1u, std::min<unsigned>(config.workers, static_cast<unsigned>(distances.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < distances.size(); i = next++) {
          try {
            t.rows[i] = point(distances[i]);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return t;
}

}  // namespace qillum
