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

#include "qillum/event_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "qillum/errors.hpp"
#include "qillum/random.hpp"

namespace qillum {

namespace {

struct Detector {
  Channel channel;
  PbsPort port;
  const DetectorModel* model;
  std::vector<std::uint64_t> hits;
};

class Sampler {
 public:
  Sampler(const ExperimentPlan& plan, std::uint64_t setting_seed)
      : plan_(plan), rng_(setting_seed), pointing_rng_(setting_seed, 1) {
    const bool wander = plan.link.pointing_rms > 0;
    aligned_transmission_ = end_to_end_transmission(plan.link, PointingOffsets{}).total;
    slice_ps_ = wander ? plan.pointing_coherence_time_s * 1e12 : 0.0;
    current_transmission_ = aligned_transmission_;
  }

  RandomSource& rng() { return rng_; }

  // Probe survival probability at emission time t_ps.
  double transmission_at(double t_ps) {
    if (slice_ps_ <= 0) return aligned_transmission_;
    const auto slice = static_cast<std::int64_t>(t_ps / slice_ps_);
    while (current_slice_ < slice) {
      ++current_slice_;
      const auto offsets = sample_pointing(plan_.link, pointing_rng_);
      if (current_slice_ == slice) current_transmission_ = end_to_end_transmission(plan_.link, offsets).total;
    }
    return current_transmission_;
  }

 private:
  const ExperimentPlan& plan_;
  RandomSource rng_;
  RandomSource pointing_rng_;
  double aligned_transmission_ = 1.0;
  double current_transmission_ = 1.0;
  double slice_ps_ = 0.0;
  std::int64_t current_slice_ = -1;
};

void detect(Detector& det, std::uint64_t arrival_ps, RandomSource& rng) {
  const DetectorModel& m = *det.model;
  if (!rng.bernoulli(m.efficiency)) return;
  std::int64_t ts = static_cast<std::int64_t>(arrival_ps);
  if (m.timing_jitter_rms_ps > 0) ts += std::llround(m.timing_jitter_rms_ps * rng.normal());
  det.hits.push_back(static_cast<std::uint64_t>(std::max<std::int64_t>(ts, 0)));
}

std::uint64_t add_dark_counts(Detector& det, double duration_ps, RandomSource& rng) {
  const double rate = det.model->dark_count_rate;
  if (rate <= 0) return 0;
  const double mean_gap_ps = 1e12 / rate;
  std::uint64_t n = 0;
  for (double t = rng.exponential(mean_gap_ps); t < duration_ps; t += rng.exponential(mean_gap_ps)) {
    det.hits.push_back(static_cast<std::uint64_t>(std::llround(t)));
    ++n;
  }
  return n;
}

// Non-paralyzable dead time: a hit closer than dead_time to the last kept hit is lost.
std::uint64_t apply_dead_time(std::vector<std::uint64_t>& hits, double dead_time_ps) {
  if (dead_time_ps <= 0 || hits.empty()) return 0;
  std::size_t kept = 1;
  for (std::size_t i = 1; i < hits.size(); ++i) {
    if (static_cast<double>(hits[i] - hits[kept - 1]) >= dead_time_ps) hits[kept++] = hits[i];
  }
  const std::uint64_t lost = hits.size() - kept;
  hits.resize(kept);
  return lost;
}

}  // namespace

void DetectorModel::validate() const {
  if (!(efficiency >= 0 && efficiency <= 1)) throw ConfigError("detector efficiency must lie in [0, 1]");
  if (!(dark_count_rate >= 0) || !(timing_jitter_rms_ps >= 0) || !(dead_time_ps >= 0))
    throw ConfigError("detector rates and times must be non-negative");
}

const DetectorModel& DetectorSet::operator[](Channel c) const {
  switch (c) {
    case Channel::probe:
      return probe;
    case Channel::reference:
      return reference;
    case Channel::idler:
      return idler;
  }
  throw std::out_of_range("unknown channel");
}

void ExperimentPlan::validate() const {
  try {
    if (!(duration_per_setting_s >= 0) || !std::isfinite(duration_per_setting_s))
      throw ConfigError("duration_per_setting must be finite and non-negative");
    if (settings.empty()) throw ConfigError("plan needs at least one analyzer setting");
    for (const auto& s : settings)
      if (!std::isfinite(s.alpha_deg) || !std::isfinite(s.beta_deg))
        throw ConfigError("analyzer angles must be finite");
    if (!(bs_probe_fraction > 0 && bs_probe_fraction < 1))
      throw ConfigError("bs_probe_fraction must lie in (0, 1)");
    if (!(n_air >= 1.0)) throw ConfigError("n_air must be at least 1");
    if (!(pointing_coherence_time_s > 0)) throw ConfigError("pointing_coherence_time must be positive");
    if (delays.idler_ps < 0 || delays.reference_ps < 0 || delays.probe_ps < 0)
      throw ConfigError("path delays must be non-negative");
    source.validate();
    link.validate();
    detectors.probe.validate();
    detectors.reference.validate();
    detectors.idler.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::int64_t roundtrip_delay_ps(double object_distance_m, double n_air) {
  return std::llround(2.0 * object_distance_m * n_air / kSpeedOfLight * 1e12);
}

Outcome sample_outcome(const OutcomeProbabilities& p, RandomSource& rng) {
  const double u = rng.uniform() * p.sum();
  double acc = 0.0;
  for (int k = 0; k < 3; ++k) {
    acc += p.p[k];
    if (u < acc) return static_cast<Outcome>(k);
  }
  return Outcome::VV;
}

SettingRun simulate_setting(const ExperimentPlan& plan, std::size_t index) {
  plan.validate();
  if (index >= plan.settings.size()) throw std::out_of_range("setting index out of range");

  SettingRun run;
  run.setting = plan.settings[index];
  run.seed = derive_seed(plan.seed, index);

  const auto probabilities = coincidence_probabilities(noisy_state(plan.source), run.setting);
  Sampler sampler(plan, run.seed);
  RandomSource& rng = sampler.rng();

  // Detector layout: [channel][port].
  std::vector<Detector> detectors;
  for (Channel c : {Channel::probe, Channel::reference, Channel::idler}) {
    detectors.push_back({c, PbsPort::transmitted, &plan.detectors[c], {}});
    if (plan.record_reflected_ports) detectors.push_back({c, PbsPort::reflected, &plan.detectors[c], {}});
  }
  const std::size_t per_channel = plan.record_reflected_ports ? 2 : 1;
  auto detector_for = [&](Channel c, int port) -> Detector* {
    if (port == 1 && !plan.record_reflected_ports) return nullptr;
    return &detectors[(static_cast<std::size_t>(c) - 1) * per_channel + static_cast<std::size_t>(port)];
  };

  const double duration_ps = plan.duration_ps();
  const auto roundtrip = static_cast<std::uint64_t>(roundtrip_delay_ps(plan.link.object_distance, plan.n_air));
  const auto probe_delay = roundtrip + static_cast<std::uint64_t>(plan.delays.probe_ps);
  const auto reference_delay = static_cast<std::uint64_t>(plan.delays.reference_ps);
  const auto idler_delay = static_cast<std::uint64_t>(plan.delays.idler_ps);

  if (plan.source.pair_rate > 0) {
    const double mean_gap_ps = 1e12 / plan.source.pair_rate;
    for (double t = rng.exponential(mean_gap_ps); t < duration_ps; t += rng.exponential(mean_gap_ps)) {
      ++run.stats.pairs_emitted;
      const auto emit = static_cast<std::uint64_t>(std::llround(t));
      const int outcome = static_cast<int>(sample_outcome(probabilities, rng));
      const int signal_port = outcome >> 1;
      const int idler_port = outcome & 1;

      if (Detector* d = detector_for(Channel::idler, idler_port)) detect(*d, emit + idler_delay, rng);

      if (rng.bernoulli(plan.bs_probe_fraction)) {
        ++run.stats.probe_launched;
        if (plan.record_ground_truth) run.probe_emissions_ps.push_back(emit);
        if (!rng.bernoulli(sampler.transmission_at(t))) continue;
        ++run.stats.probe_returned;
        if (Detector* d = detector_for(Channel::probe, signal_port)) detect(*d, emit + probe_delay, rng);
      } else {
        ++run.stats.reference_arrived;
        if (Detector* d = detector_for(Channel::reference, signal_port)) detect(*d, emit + reference_delay, rng);
      }
    }
  }

  for (auto& d : detectors) run.stats.dark_counts += add_dark_counts(d, duration_ps, rng);

  std::size_t total = 0;
  for (auto& d : detectors) {
    std::sort(d.hits.begin(), d.hits.end());
    run.stats.dead_time_losses += apply_dead_time(d.hits, d.model->dead_time_ps);
    total += d.hits.size();
  }

  run.tags.reserve(total);
  for (const auto& d : detectors) {
    const auto id = static_cast<std::uint32_t>(d.channel);
    const auto flags = port_flags(d.port);
    for (auto ts : d.hits) run.tags.push_back({id, flags, ts});
  }
  std::sort(run.tags.begin(), run.tags.end(), [](const TimeTag& a, const TimeTag& b) {
    if (a.timestamp_ps != b.timestamp_ps) return a.timestamp_ps < b.timestamp_ps;
    if (a.channel != b.channel) return a.channel < b.channel;
    return a.flags < b.flags;
  });
  return run;
}

RunBundle simulate_run(const ExperimentPlan& plan, unsigned workers) {
  plan.validate();
  RunBundle bundle;
  bundle.duration_per_setting_s = plan.duration_per_setting_s;
  bundle.runs.resize(plan.settings.size());

  const unsigned n_threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(plan.settings.size())));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < plan.settings.size(); ++i) bundle.runs[i] = simulate_setting(plan, i);
    return bundle;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < n_threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < plan.settings.size(); i = next++) {
          try {
            bundle.runs[i] = simulate_setting(plan, i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return bundle;
}

double singles_rate(std::size_t count, double duration_s) {
  if (!(duration_s > 0)) throw std::invalid_argument("singles_rate: duration must be positive");
  return static_cast<double>(count) / duration_s;
}

double singles_rate(std::span<const std::uint64_t> stream, double duration_s) {
  return singles_rate(stream.size(), duration_s);
}

}  // namespace qillum
