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

#include <cmath>
#include <map>

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include "qillum/errors.hpp"
#include "qillum/event_engine.hpp"
#include "support.hpp"

using namespace qillum;
using namespace qillum::testing;

namespace {

double chi_square_p_value(const std::array<std::uint64_t, 4>& observed, const OutcomeProbabilities& p) {
  std::uint64_t n = 0;
  for (auto o : observed) n += o;
  double chi2 = 0.0;
  int dof = -1;
  for (int k = 0; k < 4; ++k) {
    const double expected = static_cast<double>(n) * p.p[k];
    if (expected <= 0) {
      EXPECT_EQ(observed[k], 0u);
      continue;
    }
    chi2 += std::pow(static_cast<double>(observed[k]) - expected, 2) / expected;
    ++dof;
  }
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared(dof), chi2));
}

std::vector<std::uint64_t> all_ports(const TimeTagStream& tags, Channel c) {
  std::vector<std::uint64_t> out;
  for (const auto& t : tags)
    if (t.channel == static_cast<std::uint32_t>(c)) out.push_back(t.timestamp_ps);
  return out;
}

}  // namespace

TEST(EventEngine, RoundtripDelay) {
  EXPECT_EQ(roundtrip_delay_ps(500.0), 3336542);
  EXPECT_EQ(roundtrip_delay_ps(0.0), 0);
  EXPECT_EQ(roundtrip_delay_ps(150.0, 1.0), std::llround(300.0 / 299792458.0 * 1e12));
}

TEST(EventEngine, NoSourceNoDarksGivesEmptyStreams) {
  ExperimentPlan plan = ideal_plan(0.0, 2.0, 1);
  const auto bundle = simulate_run(plan);
  ASSERT_EQ(bundle.runs.size(), 4u);
  for (const auto& run : bundle.runs) {
    EXPECT_TRUE(run.tags.empty());
    EXPECT_EQ(run.stats.pairs_emitted, 0u);
  }
}

TEST(EventEngine, ZeroDurationGivesEmptyStreams) {
  ExperimentPlan plan = ideal_plan(1e6, 0.0, 1);
  plan.detectors.probe.dark_count_rate = 1e5;
  for (const auto& run : simulate_run(plan).runs) EXPECT_TRUE(run.tags.empty());
}

TEST(EventEngine, FixedSeedIsReproducible) {
  ExperimentPlan plan = ideal_plan(2e5, 0.05, 99);
  plan.link = bench_mirror_link(300.0);
  plan.link.pointing_rms = 0.003;
  plan.detectors.probe = {0.9, 500.0, 350.0, 20000.0};
  const auto a = simulate_run(plan, 1);
  const auto b = simulate_run(plan, 3);
  ASSERT_EQ(a.runs.size(), b.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    EXPECT_EQ(a.runs[i].tags, b.runs[i].tags);
    EXPECT_EQ(a.runs[i].seed, b.runs[i].seed);
  }
  plan.seed = 100;
  EXPECT_NE(simulate_run(plan).runs[0].tags, a.runs[0].tags);
}

TEST(EventEngine, SettingSeedsAreDerivedPerIndex) {
  ExperimentPlan plan = ideal_plan(1e4, 0.01, 5);
  const auto bundle = simulate_run(plan);
  for (std::size_t i = 0; i < bundle.runs.size(); ++i) EXPECT_EQ(bundle.runs[i].seed, derive_seed(5, i));
  EXPECT_EQ(simulate_setting(plan, 2).tags, bundle.runs[2].tags);
}

TEST(EventEngine, LosslessProbePhotonsArriveExactlyOnce) {
  ExperimentPlan plan = ideal_plan(5e5, 0.2, 3);
  plan.link = identity_link(500.0);
  plan.delays.probe_ps = 1234;
  plan.record_ground_truth = true;
  const std::uint64_t shift = 3336542 + 1234;
  for (const auto& run : simulate_run(plan).runs) {
    const auto probe = all_ports(run.tags, Channel::probe);
    ASSERT_EQ(probe.size(), run.probe_emissions_ps.size());
    ASSERT_EQ(run.stats.probe_returned, run.stats.probe_launched);
    std::vector<std::uint64_t> expected;
    for (auto t : run.probe_emissions_ps) expected.push_back(t + shift);
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(probe, expected);
  }
}

TEST(EventEngine, SampledOutcomesFollowProbabilities) {
  const auto p = coincidence_probabilities(noisy_state(0.995, 0.984), {0.0, 22.5});
  RandomSource rng(17);
  std::array<std::uint64_t, 4> counts{};
  for (int i = 0; i < 1'000'000; ++i) ++counts[static_cast<int>(sample_outcome(p, rng))];
  EXPECT_GT(chi_square_p_value(counts, p), 0.001);
}

TEST(EventEngine, JointOutcomeFrequenciesConverge) {
  ExperimentPlan plan = ideal_plan(1e6, 0.5, 23);
  plan.source.visibility_hv = 0.95;
  plan.source.visibility_ad = 0.9;
  plan.settings = {{0.0, 22.5}, {45.0, 67.5}, {10.0, 0.0}};
  plan.delays.reference_ps = 1000;
  for (const auto& run : simulate_run(plan).runs) {
    // Ideal timing: the reference tag of a pair lands exactly 1000 ps after its idler tag.
    std::map<std::uint64_t, std::uint32_t> idler;
    for (const auto& t : run.tags)
      if (t.channel == static_cast<std::uint32_t>(Channel::idler)) idler[t.timestamp_ps] = t.flags;
    std::array<std::uint64_t, 4> counts{};
    for (const auto& t : run.tags) {
      if (t.channel != static_cast<std::uint32_t>(Channel::reference)) continue;
      const auto it = idler.find(t.timestamp_ps - 1000);
      ASSERT_NE(it, idler.end());
      ++counts[(t.flags & 1u) * 2 + (it->second & 1u)];
    }
    const auto p = coincidence_probabilities(noisy_state(plan.source), run.setting);
    EXPECT_GT(chi_square_p_value(counts, p), 0.001) << run.setting.alpha_deg << "," << run.setting.beta_deg;
  }
}

TEST(EventEngine, ProbeToReferenceRatioIsLinkTransmission) {
  ExperimentPlan plan = ideal_plan(1e6, 1.0, 41);
  plan.settings = {{0.0, 0.0}};
  plan.link = bench_mirror_link(150.0);
  const double eta = end_to_end_transmission(plan.link).total;
  const auto run = simulate_run(plan).runs[0];
  const double np = static_cast<double>(all_ports(run.tags, Channel::probe).size());
  const double nr = static_cast<double>(all_ports(run.tags, Channel::reference).size());
  // Each signal photon lands on the probe detector with probability eta/(1+eta) given it lands anywhere.
  const double q = eta / (1 + eta), n = np + nr;
  EXPECT_NEAR(np, n * q, 5 * std::sqrt(n * q * (1 - q)));
  EXPECT_NEAR(np / nr, eta, 5 * eta * std::sqrt(1 / np + 1 / nr));
}

TEST(EventEngine, ReferenceSinglesMatchBenchRate) {
  ExperimentPlan plan = ideal_plan(332e3, 1.0, 8);
  plan.settings = {{0.0, 67.5}};
  plan.source = {332e3, 0.995, 0.984, 0.38};
  plan.detectors.reference = {0.92, 100.0, 350.0, 0.0};
  const auto run = simulate_run(plan).runs[0];
  const double rate = singles_rate(all_ports(run.tags, Channel::reference), 1.0);
  const double expected = 332e3 * 0.5 * 0.92 + 2 * 100.0;
  EXPECT_NEAR(rate, expected, 5 * std::sqrt(expected));
  EXPECT_NEAR(rate, 153e3, 11e3);
}

TEST(EventEngine, SinglesRate) {
  EXPECT_EQ(singles_rate(std::vector<std::uint64_t>{}, 1.0), 0.0);
  EXPECT_EQ(singles_rate(std::size_t{1000}, 2.0), 500.0);
  EXPECT_THROW(singles_rate(std::size_t{1}, 0.0), std::invalid_argument);
}

TEST(EventEngine, DarkOnlyChannelRate) {
  ExperimentPlan plan = ideal_plan(0.0, 10.0, 77);
  plan.settings = {{0.0, 0.0}};
  plan.record_reflected_ports = false;
  plan.detectors.probe.dark_count_rate = 100.0;
  const auto run = simulate_run(plan).runs[0];
  const double rate = singles_rate(channel_timestamps(run.tags, Channel::probe), 10.0);
  EXPECT_NEAR(rate, 100.0, 5 * std::sqrt(1000.0) / 10.0);
  EXPECT_EQ(run.tags.size(), channel_timestamps(run.tags, Channel::probe).size());
}

TEST(EventEngine, StreamsSortedNonNegativeAndDeadTimeRespected) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    ExperimentPlan plan = ideal_plan(2e6, 0.02, seed);
    plan.link = bench_mirror_link(50.0);
    const DetectorModel jittery{0.8, 5e4, 2000.0, 50000.0};
    plan.detectors = {jittery, jittery, jittery};
    plan.delays = {0, 0, 0};
    for (const auto& run : simulate_run(plan).runs) {
      EXPECT_TRUE(is_sorted_stream(run.tags));
      EXPECT_GT(run.stats.dead_time_losses, 0u);
      for (Channel c : {Channel::probe, Channel::reference, Channel::idler})
        for (PbsPort port : {PbsPort::transmitted, PbsPort::reflected}) {
          const auto ts = channel_timestamps(run.tags, c, port);
          for (std::size_t i = 1; i < ts.size(); ++i) ASSERT_GE(ts[i] - ts[i - 1], 50000u);
        }
    }
  }
}

TEST(EventEngine, InvalidPlansRejectedBeforeSampling) {
  auto expect_bad = [](auto mutate) {
    ExperimentPlan plan = ideal_plan(1e3, 0.1, 1);
    mutate(plan);
    EXPECT_THROW(simulate_run(plan), ConfigError);
  };
  expect_bad([](ExperimentPlan& p) { p.bs_probe_fraction = 0.0; });
  expect_bad([](ExperimentPlan& p) { p.bs_probe_fraction = 1.0; });
  expect_bad([](ExperimentPlan& p) { p.settings.clear(); });
  expect_bad([](ExperimentPlan& p) { p.duration_per_setting_s = -1.0; });
  expect_bad([](ExperimentPlan& p) { p.detectors.idler.efficiency = 1.5; });
  expect_bad([](ExperimentPlan& p) { p.detectors.probe.dark_count_rate = -1.0; });
  expect_bad([](ExperimentPlan& p) { p.source.visibility_ad = 1.0, p.source.visibility_hv = 0.5; });
  expect_bad([](ExperimentPlan& p) { p.link.object_reflectivity = 2.0; });
  expect_bad([](ExperimentPlan& p) { p.delays.reference_ps = -5; });
}
