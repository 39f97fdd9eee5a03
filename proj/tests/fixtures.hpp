// tests/fixtures.hpp

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

// Shared synthetic fixtures. The two-speaker corpus is built from harmonic
// tones whose f0 grids overlap, so a classifier separating them has to use
// timbre rather than pitch; that is exactly the property a voice skin is
// supposed to transfer while leaving f0 alone.

#ifndef AUGFORGE_TESTS_FIXTURES_HPP_
#define AUGFORGE_TESTS_FIXTURES_HPP_

#include <string>
#include <utility>
#include <vector>

#include "augforge/audio.hpp"
#include "augforge/common.hpp"
#include "augforge/skinconv.hpp"

namespace augforge::testing {

struct FixtureUtterance {
  std::string id;
  std::string speaker;
  double f0_hz = 0.0;
  Waveform audio;
};

// Fundamental-dominant vs second-harmonic-dominant recipes. The two spectral
// shapes are far apart in mel space while both stay below 400 Hz at the
// highest fixture f0, far from Nyquist at 16 kHz.
inline const std::vector<double>& TimbreAlpha() {
  static const std::vector<double> t = {1.0, 0.05};
  return t;
}

inline const std::vector<double>& TimbreBrava() {
  static const std::vector<double> t = {0.25, 1.0};
  return t;
}

// 20 utterances per speaker, 1 s each. The f0 grids interleave over a narrow
// 130-154 Hz band so pitch carries no speaker identity; only timbre does.
inline std::vector<FixtureUtterance> MakeFixtureCorpus(int per_speaker = 20,
                                                       double duration_s = 1.0) {
  std::vector<FixtureUtterance> corpus;
  for (int u = 0; u < per_speaker; ++u) {
    FixtureUtterance a;
    a.id = detail::Str("alpha_", u);
    a.speaker = "alpha";
    a.f0_hz = 130.0 + 1.0 * u;
    a.audio = SynthTone(a.f0_hz, duration_s, kCanonicalSampleRateHz, TimbreAlpha());
    corpus.push_back(std::move(a));

    FixtureUtterance b;
    b.id = detail::Str("brava_", u);
    b.speaker = "brava";
    b.f0_hz = 135.0 + 1.0 * u;
    b.audio = SynthTone(b.f0_hz, duration_s, kCanonicalSampleRateHz, TimbreBrava());
    corpus.push_back(std::move(b));
  }
  return corpus;
}

// Desk-scale converter sized for the fixture: the 2-wide latent (one vector
// per 64 samples) cannot carry timbre, which forces identity through z, and
// the 7-layer decoder's 128-sample receptive field covers a full pitch
// period down to 130 Hz.
inline ConverterConfig FixtureConverterConfig() {
  ConverterConfig cfg;
  cfg.quantization_levels = 256;
  cfg.encoder_layers = 3;
  cfg.encoder_hidden = 16;
  cfg.encoder_kernel = 8;
  cfg.encoder_stride = 4;
  cfg.latent_dim = 2;
  cfg.decoder_layers = 7;
  cfg.decoder_hidden = 16;
  cfg.speaker_dim = 4;
  cfg.shift = 1;
  cfg.sample_rate_hz = kCanonicalSampleRateHz;
  return cfg;
}

// Much smaller still: for gradient checks and other exhaustive loops.
inline ConverterConfig TinyConverterConfig() {
  ConverterConfig cfg;
  cfg.quantization_levels = 8;
  cfg.encoder_layers = 2;
  cfg.encoder_hidden = 3;
  cfg.encoder_kernel = 4;
  cfg.encoder_stride = 2;
  cfg.latent_dim = 2;
  cfg.decoder_layers = 2;
  cfg.decoder_hidden = 3;
  cfg.speaker_dim = 2;
  cfg.shift = 1;
  cfg.sample_rate_hz = kCanonicalSampleRateHz;
  cfg.f0_frame_len_s = 0.004;  // short analysis window so ~200-sample inputs carry f0 frames
  cfg.f0_frame_hop_s = 0.002;
  return cfg;
}

// Hand-built quantized sample: levels cycle through the alphabet and the f0
// track alternates voiced/unvoiced, so every conditioning path is exercised.
inline TrainSample MakeTinySample(const ConverterConfig& cfg, size_t num_samples,
                                  int speaker_index, uint64_t seed) {
  Rng rng(seed);
  TrainSample s;
  s.quantized.quantization_levels = cfg.quantization_levels;
  s.quantized.sample_rate_hz = cfg.sample_rate_hz;
  s.quantized.levels.resize(num_samples);
  for (size_t t = 0; t < num_samples; ++t)
    s.quantized.levels[t] =
        static_cast<int>(rng.NextBelow(static_cast<uint64_t>(cfg.quantization_levels)));

  const size_t win = FrameLenSamples(cfg.f0_frame_len_s, cfg.sample_rate_hz);
  const size_t hop = FrameLenSamples(cfg.f0_frame_hop_s, cfg.sample_rate_hz);
  const size_t frames = NumFrames(num_samples, win, hop);
  s.f0.frame_hop_s = cfg.f0_frame_hop_s;
  for (size_t t = 0; t < frames; ++t) {
    const bool voiced = rng.Bernoulli(0.7);
    s.f0.voiced.push_back(voiced);
    s.f0.f0_hz.push_back(voiced ? 100.0 + 200.0 * rng.NextDouble() : 0.0);
  }
  s.speaker_index = speaker_index;
  return s;
}

}  // namespace augforge::testing

#endif  // AUGFORGE_TESTS_FIXTURES_HPP_
