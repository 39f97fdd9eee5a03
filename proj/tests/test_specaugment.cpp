// tests/test_specaugment.cpp

// Copyright 2026  Augforge Authors

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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "augforge/rng.hpp"
#include "augforge/specaugment.hpp"

using namespace augforge;

namespace {

MelSpectrogram RandomSpec(size_t t, size_t b, uint64_t seed) {
  Rng rng(seed);
  MelSpectrogram m;
  m.frames = Matrix(t, b);
  for (double& v : m.frames.data) v = -10.0 + 8.0 * rng.NextDouble();
  return m;
}

bool SameFrames(const MelSpectrogram& a, const MelSpectrogram& b) {
  if (a.frames.rows != b.frames.rows || a.frames.cols != b.frames.cols) return false;
  for (size_t i = 0; i < a.frames.data.size(); ++i)
    if (a.frames.data[i] != b.frames.data[i]) return false;
  return true;
}

size_t ChangedCells(const MelSpectrogram& before, const MelSpectrogram& after) {
  size_t n = 0;
  for (size_t i = 0; i < before.frames.data.size(); ++i)
    if (before.frames.data[i] != after.frames.data[i]) ++n;
  return n;
}

// Sized for the narrow test spectrograms; the defaults assume 80+ bands.
SpecAugmentPolicy SmallPolicy() {
  SpecAugmentPolicy p;
  p.warp_w = 2;
  p.freq_mask_f = 2;
  p.n_freq_masks = 1;
  p.time_mask_t = 5;
  p.n_time_masks = 1;
  return p;
}

}  // namespace

TEST_CASE("zero policy is byte-identical", "[specaugment]") {
  const MelSpectrogram m = RandomSpec(60, 16, 1);
  SpecAugmentPolicy zero;
  zero.warp_w = 0;
  zero.freq_mask_f = 0;
  zero.n_freq_masks = 0;
  zero.time_mask_t = 0;
  zero.n_time_masks = 0;
  Rng rng(9);
  const MelSpectrogram out = SpecAugmentOne(m, zero, rng);
  REQUIRE(SameFrames(m, out));
}

TEST_CASE("time warp keeps shape and endpoints", "[specaugment]") {
  const MelSpectrogram m = RandomSpec(100, 8, 2);
  Rng rng(3);
  const MelSpectrogram out = TimeWarp(m, 20, rng);
  REQUIRE(out.frames.rows == m.frames.rows);
  REQUIRE(out.frames.cols == m.frames.cols);
  for (size_t b = 0; b < m.frames.cols; ++b) {
    REQUIRE(out.frames(0, b) == m.frames(0, b));
    REQUIRE(out.frames(m.frames.rows - 1, b) == m.frames(m.frames.rows - 1, b));
  }
}

TEST_CASE("time warp of a ramp stays monotone within range", "[specaugment]") {
  MelSpectrogram ramp;
  ramp.frames = Matrix(50, 2);
  for (size_t t = 0; t < 50; ++t)
    for (size_t b = 0; b < 2; ++b) ramp.frames(t, b) = static_cast<double>(t);
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const MelSpectrogram out = TimeWarp(ramp, 10, rng);
    REQUIRE(out.frames(0, 0) == 0.0);
    REQUIRE(out.frames(49, 0) == 49.0);
    for (size_t t = 1; t < 50; ++t) {
      REQUIRE(out.frames(t, 0) >= out.frames(t - 1, 0));
      REQUIRE(out.frames(t, 0) <= 49.0);
    }
  }
}

TEST_CASE("time warp passes short inputs through without consuming draws", "[specaugment]") {
  const MelSpectrogram m = RandomSpec(10, 4, 4);
  Rng warped_rng(123);
  const MelSpectrogram out = TimeWarp(m, 5, warped_rng);  // T == 2w, no anchor room
  REQUIRE(SameFrames(m, out));
  Rng fresh(123);
  REQUIRE(warped_rng.NextU64() == fresh.NextU64());
}

TEST_CASE("masked cells take the pre-mask mean of the input", "[specaugment]") {
  const MelSpectrogram m = RandomSpec(40, 12, 5);
  const double mean = PairwiseMean(m.frames.data);
  SpecAugmentPolicy policy;
  policy.warp_w = 0;
  policy.freq_mask_f = 12;
  policy.time_mask_t = 20;
  size_t changed_total = 0;
  for (uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const MelSpectrogram out = ApplyMasks(m, policy, rng);
    for (size_t i = 0; i < m.frames.data.size(); ++i)
      if (out.frames.data[i] != m.frames.data[i]) {
        ++changed_total;
        REQUIRE(out.frames.data[i] == mean);
      }
  }
  REQUIRE(changed_total > 0);
}

TEST_CASE("fixed fill value is honored", "[specaugment]") {
  const MelSpectrogram m = RandomSpec(40, 12, 6);
  SpecAugmentPolicy policy;
  policy.warp_w = 0;
  policy.freq_mask_f = 12;
  policy.time_mask_t = 20;
  policy.fill_with_mean = false;
  policy.mask_value = -7.25;
  Rng rng(8);
  const MelSpectrogram out = ApplyMasks(m, policy, rng);
  size_t changed = 0;
  for (size_t i = 0; i < m.frames.data.size(); ++i)
    if (out.frames.data[i] != m.frames.data[i]) {
      ++changed;
      REQUIRE(out.frames.data[i] == -7.25);
    }
  REQUIRE(changed > 0);
}

TEST_CASE("masked cell count never exceeds the analytic budget", "[specaugment]") {
  SpecAugmentPolicy policy;
  policy.warp_w = 0;  // isolate masking
  policy.freq_mask_f = 6;
  policy.n_freq_masks = 2;
  policy.time_mask_t = 14;
  policy.n_time_masks = 2;
  const MelSpectrogram m = RandomSpec(48, 16, 7);
  const size_t budget = 2 * 6 * 48 + 2 * 14 * 16;
  for (uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const MelSpectrogram out = ApplyMasks(m, policy, rng);
    REQUIRE(ChangedCells(m, out) <= budget);
  }
}

TEST_CASE("time mask ratio cap bounds each mask on short inputs", "[specaugment]") {
  SpecAugmentPolicy policy;
  policy.warp_w = 0;
  policy.freq_mask_f = 0;
  policy.n_freq_masks = 0;
  policy.time_mask_t = 100;
  policy.n_time_masks = 1;
  policy.time_mask_ratio_cap = 0.3;
  const MelSpectrogram m = RandomSpec(10, 5, 9);
  for (uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const MelSpectrogram out = ApplyMasks(m, policy, rng);
    size_t masked_rows = 0;
    for (size_t t = 0; t < m.frames.rows; ++t) {
      bool row_changed = false;
      for (size_t b = 0; b < m.frames.cols; ++b)
        if (out.frames(t, b) != m.frames(t, b)) row_changed = true;
      if (row_changed) ++masked_rows;
    }
    REQUIRE(masked_rows <= 3);  // floor(0.3 * 10)
  }
}

TEST_CASE("mask width cannot exceed the band count", "[specaugment]") {
  SpecAugmentPolicy policy;
  policy.freq_mask_f = 30;
  const MelSpectrogram m = RandomSpec(20, 8, 10);
  Rng rng(1);
  REQUIRE_THROWS_AS(ApplyMasks(m, policy, rng), Error);
}

TEST_CASE("batch augmentor honors p at the batch level", "[specaugment]") {
  const std::vector<MelSpectrogram> batch = {RandomSpec(30, 8, 11), RandomSpec(25, 8, 12)};

  BatchAugmentor never;
  never.policy = SmallPolicy();
  never.apply_prob = 0.0;
  never.rng_seed = 42;
  for (uint64_t i = 0; i < 32; ++i) {
    bool applied = true;
    const auto out = AugmentBatch(batch, never, i, &applied);
    REQUIRE_FALSE(applied);
    REQUIRE(SameFrames(out[0], batch[0]));
    REQUIRE(SameFrames(out[1], batch[1]));
  }

  BatchAugmentor always;
  always.policy = SmallPolicy();
  always.apply_prob = 1.0;
  always.rng_seed = 42;
  size_t applied_count = 0;
  for (uint64_t i = 0; i < 32; ++i) {
    bool applied = false;
    AugmentBatch(batch, always, i, &applied);
    if (applied) ++applied_count;
  }
  REQUIRE(applied_count == 32);
}

TEST_CASE("realized fraction concentrates near p", "[specaugment]") {
  const std::vector<MelSpectrogram> batch = {RandomSpec(20, 6, 13)};
  BatchAugmentor aug;
  aug.policy = SmallPolicy();
  aug.apply_prob = 0.5;
  aug.rng_seed = 2026;
  size_t applied_count = 0;
  const uint64_t n = 2000;
  for (uint64_t i = 0; i < n; ++i) {
    bool applied = false;
    AugmentBatch(batch, aug, i, &applied);
    if (applied) ++applied_count;
  }
  const double fraction = static_cast<double>(applied_count) / static_cast<double>(n);
  REQUIRE(fraction > 0.45);
  REQUIRE(fraction < 0.55);
}

TEST_CASE("batch results depend only on seed and batch index", "[specaugment]") {
  const std::vector<MelSpectrogram> batch = {RandomSpec(36, 10, 14), RandomSpec(30, 10, 15)};
  BatchAugmentor aug;
  aug.policy = SmallPolicy();
  aug.apply_prob = 1.0;
  aug.rng_seed = 7;
  const auto out_forward_3 = AugmentBatch(batch, aug, 3);
  const auto out_forward_5 = AugmentBatch(batch, aug, 5);
  const auto out_again_5 = AugmentBatch(batch, aug, 5);
  const auto out_again_3 = AugmentBatch(batch, aug, 3);
  REQUIRE(SameFrames(out_forward_3[0], out_again_3[0]));
  REQUIRE(SameFrames(out_forward_3[1], out_again_3[1]));
  REQUIRE(SameFrames(out_forward_5[0], out_again_5[0]));
  REQUIRE_FALSE(SameFrames(out_forward_3[0], out_forward_5[0]));
}
