// include/augforge/specaugment.hpp

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

#ifndef AUGFORGE_SPECAUGMENT_HPP_
#define AUGFORGE_SPECAUGMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "augforge/common.hpp"
#include "augforge/dsp.hpp"
#include "augforge/rng.hpp"

namespace augforge {

// The "LibriSpeech double" numbers are the library defaults; change them per
// corpus through the config file.
struct SpecAugmentPolicy {
  int warp_w = 80;                 // W, max anchor displacement in frames
  int freq_mask_f = 27;            // F, max mask width in bands
  int n_freq_masks = 2;            // mF
  int time_mask_t = 100;           // T, max mask width in frames
  int n_time_masks = 2;            // mT
  double time_mask_ratio_cap = 1.0;  // each time mask also capped at cap * n_frames
  // Masked entries are set to the input's per-utterance mean unless
  // fill_with_mean is false, in which case mask_value is used.
  bool fill_with_mean = true;
  double mask_value = 0.0;

  void Validate() const {
    AF_CHECK(warp_w >= 0, "specaugment: warp_w must be >= 0, got ", warp_w);
    AF_CHECK(freq_mask_f >= 0, "specaugment: freq_mask_f must be >= 0, got ", freq_mask_f);
    AF_CHECK(n_freq_masks >= 0, "specaugment: n_freq_masks must be >= 0, got ", n_freq_masks);
    AF_CHECK(time_mask_t >= 0, "specaugment: time_mask_t must be >= 0, got ", time_mask_t);
    AF_CHECK(n_time_masks >= 0, "specaugment: n_time_masks must be >= 0, got ", n_time_masks);
    AF_CHECK(time_mask_ratio_cap >= 0.0 && time_mask_ratio_cap <= 1.0,
             "specaugment: time_mask_ratio_cap must be in [0, 1], got ", time_mask_ratio_cap);
  }
};

struct BatchAugmentor {
  SpecAugmentPolicy policy;
  double apply_prob = 1.0;  // p; 1 recovers standard SpecAugment
  uint64_t rng_seed = 0;

  void Validate() const {
    policy.Validate();
    AF_CHECK(apply_prob >= 0.0 && apply_prob <= 1.0,
             "specaugment: apply_prob must be in [0, 1], got ", apply_prob);
  }
};

// Piecewise-linear re-timing of the frame axis. An anchor frame a drawn from
// [w, T-w) is displaced by delta drawn from [-w, w]; [0, a] is stretched onto
// [0, a+delta] and [a, T-1] onto [a+delta, T-1], and output frames are linear
// interpolations of the two nearest source frames. Inputs with T <= 2w (no
// room for an anchor) pass through unchanged without consuming random draws.
inline MelSpectrogram TimeWarp(const MelSpectrogram& m, int w, Rng& rng) {
  AF_CHECK(w >= 0, "time warp: w must be >= 0, got ", w);
  const int T = static_cast<int>(m.frames.rows);
  if (w == 0 || T <= 2 * w) return m;

  const int a = rng.NextInt(w, T - w - 1);
  const int delta = rng.NextInt(-w, w);
  // Keep both segments at nonzero length so the inverse map stays a function.
  const int a_to = std::clamp(a + delta, 1, T - 2);

  MelSpectrogram out = m;
  const size_t bands = m.frames.cols;
  for (int t = 0; t < T; ++t) {
    double src;
    if (t <= a_to) {
      src = static_cast<double>(t) * a / a_to;
    } else {
      src = a + static_cast<double>(t - a_to) * (T - 1 - a) / (T - 1 - a_to);
    }
    const int lo = static_cast<int>(std::floor(src));
    const int hi = std::min(lo + 1, T - 1);
    const double frac = src - lo;
    for (size_t b = 0; b < bands; ++b)
      out.frames(t, b) = (1.0 - frac) * m.frames(lo, b) + frac * m.frames(hi, b);
  }
  return out;
}

// mF frequency masks then mT time masks, widths drawn uniformly from
// {0..F} and {0..min(T, cap * n_frames)}, starts uniform over the valid
// range. Masks may overlap. The mean fill value is computed from the input
// once, before any mask lands.
inline MelSpectrogram ApplyMasks(const MelSpectrogram& m, const SpecAugmentPolicy& policy,
                                 Rng& rng) {
  policy.Validate();
  const int T = static_cast<int>(m.frames.rows);
  const int B = static_cast<int>(m.frames.cols);
  AF_CHECK(policy.freq_mask_f <= B, "specaugment: freq_mask_f (", policy.freq_mask_f,
           ") exceeds band count (", B, ")");

  const double fill = policy.fill_with_mean ? PairwiseMean(m.frames.data) : policy.mask_value;
  MelSpectrogram out = m;

  for (int k = 0; k < policy.n_freq_masks; ++k) {
    const int f = rng.NextInt(0, policy.freq_mask_f);
    if (f == 0) continue;
    const int f0 = rng.NextInt(0, B - f);
    for (int t = 0; t < T; ++t)
      for (int b = f0; b < f0 + f; ++b) out.frames(t, b) = fill;
  }

  const int t_cap = std::min(
      policy.time_mask_t,
      static_cast<int>(std::floor(policy.time_mask_ratio_cap * static_cast<double>(T))));
  for (int k = 0; k < policy.n_time_masks; ++k) {
    const int t_width = rng.NextInt(0, std::max(0, t_cap));
    if (t_width == 0) continue;
    const int t0 = rng.NextInt(0, T - t_width);
    for (int t = t0; t < t0 + t_width; ++t)
      for (int b = 0; b < B; ++b) out.frames(t, b) = fill;
  }
  return out;
}

inline MelSpectrogram SpecAugmentOne(const MelSpectrogram& m, const SpecAugmentPolicy& policy,
                                     Rng& rng) {
  MelSpectrogram warped = TimeWarp(m, policy.warp_w, rng);
  return ApplyMasks(warped, policy, rng);
}

// One Bernoulli(p) decision per batch; on success every spectrogram receives
// time warp then masks with its own draws, otherwise the batch passes
// through untouched. Per-batch randomness is split off (rng_seed,
// batch_index), so batches can run in parallel in any order. `applied`, when
// non-null, reports the Bernoulli outcome.
inline std::vector<MelSpectrogram> AugmentBatch(const std::vector<MelSpectrogram>& batch,
                                                const BatchAugmentor& aug, uint64_t batch_index,
                                                bool* applied = nullptr) {
  AF_CHECK(!batch.empty(), "augment batch: empty batch");
  aug.Validate();
  Rng rng(Rng::Derive(aug.rng_seed, batch_index));
  const bool apply = rng.Bernoulli(aug.apply_prob);
  if (applied != nullptr) *applied = apply;
  if (!apply) return batch;
  std::vector<MelSpectrogram> out;
  out.reserve(batch.size());
  for (const MelSpectrogram& m : batch) out.push_back(SpecAugmentOne(m, aug.policy, rng));
  return out;
}

}  // namespace augforge

#endif  // AUGFORGE_SPECAUGMENT_HPP_
