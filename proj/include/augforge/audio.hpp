// include/augforge/audio.hpp

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

#ifndef AUGFORGE_AUDIO_HPP_
#define AUGFORGE_AUDIO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "augforge/common.hpp"

namespace augforge {

// The one sample rate the pipeline operates at. Files at any other rate are
// rejected rather than resampled; resampling is out of scope.
constexpr int kCanonicalSampleRateHz = 16000;

// Mono PCM audio, amplitudes in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kCanonicalSampleRateHz;

  void Validate() const {
    AF_CHECK(sample_rate_hz > 0, "Waveform: sample rate must be positive, got ", sample_rate_hz);
    AF_CHECK(!samples.empty(), "Waveform: empty sample buffer");
    for (size_t i = 0; i < samples.size(); ++i) {
      AF_CHECK(std::isfinite(samples[i]), "Waveform: non-finite sample at index ", i);
      AF_CHECK(samples[i] >= -1.0 && samples[i] <= 1.0,
               "Waveform: sample ", samples[i], " at index ", i, " outside [-1, 1]");
    }
  }

  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate_hz);
  }
};

// Companded audio as integer levels in [0, Q-1]; the categorical domain of
// the converter's per-step targets.
struct QuantizedWaveform {
  std::vector<int> levels;
  int quantization_levels = 256;
  int sample_rate_hz = kCanonicalSampleRateHz;

  void Validate() const {
    AF_CHECK(quantization_levels >= 2, "QuantizedWaveform: need Q >= 2, got ", quantization_levels);
    AF_CHECK(sample_rate_hz > 0, "QuantizedWaveform: sample rate must be positive");
    for (size_t i = 0; i < levels.size(); ++i)
      AF_CHECK(levels[i] >= 0 && levels[i] < quantization_levels,
               "QuantizedWaveform: level ", levels[i], " at index ", i,
               " outside [0, ", quantization_levels - 1, "]");
  }
};

// --- RIFF/WAVE, 16-bit PCM mono, little-endian. No other codecs. ---

inline Waveform ReadWav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  AF_CHECK(is.good(), "cannot open wav file: ", path);

  char riff[4], wave[4];
  AF_CHECK(ReadBytes(is, riff, 4), "truncated wav file: ", path);
  AF_CHECK(std::string(riff, 4) == "RIFF", path, ": not a RIFF file");
  ReadU32Le(is, path + " riff size");
  AF_CHECK(ReadBytes(is, wave, 4), "truncated wav file: ", path);
  AF_CHECK(std::string(wave, 4) == "WAVE", path, ": RIFF form is not WAVE");

  bool have_fmt = false;
  uint16_t audio_format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<double> samples;
  bool have_data = false;

  while (true) {
    char id[4];
    if (!ReadBytes(is, id, 4)) break;  // clean EOF between chunks
    const uint32_t size = ReadU32Le(is, path + " chunk size");
    const std::string chunk(id, 4);
    if (chunk == "fmt ") {
      AF_CHECK(size >= 16, path, ": fmt chunk too small");
      audio_format = ReadU16Le(is, path + " fmt");
      channels = ReadU16Le(is, path + " fmt");
      rate = ReadU32Le(is, path + " fmt");
      ReadU32Le(is, path + " fmt");  // byte rate
      ReadU16Le(is, path + " fmt");  // block align
      bits = ReadU16Le(is, path + " fmt");
      is.seekg(size - 16 + (size & 1), std::ios::cur);
      have_fmt = true;
    } else if (chunk == "data") {
      AF_CHECK(have_fmt, path, ": data chunk before fmt chunk");
      AF_CHECK(audio_format == 1, path, ": unsupported encoding (audio format ", audio_format,
               ", expected 1 = PCM)");
      AF_CHECK(channels == 1, path, ": unsupported channel count ", channels, " (mono only)");
      AF_CHECK(bits == 16, path, ": unsupported bit depth ", bits, " (16-bit only)");
      AF_CHECK(size % 2 == 0, path, ": data chunk has odd byte count");
      const size_t n = size / 2;
      samples.resize(n);
      std::vector<unsigned char> raw(size);
      AF_CHECK(ReadBytes(is, raw.data(), size), path, ": truncated data chunk");
      for (size_t i = 0; i < n; ++i) {
        const int16_t v =
            static_cast<int16_t>(static_cast<uint16_t>(raw[2 * i]) |
                                 (static_cast<uint16_t>(raw[2 * i + 1]) << 8));
        samples[i] = static_cast<double>(v) / 32768.0;
      }
      if (size & 1) is.seekg(1, std::ios::cur);
      have_data = true;
    } else {
      is.seekg(size + (size & 1), std::ios::cur);
      AF_CHECK(!is.fail(), path, ": truncated chunk '", chunk, "'");
    }
  }

  AF_CHECK(have_fmt && have_data, path, ": missing ", have_fmt ? "data" : "fmt", " chunk");
  AF_CHECK(rate == static_cast<uint32_t>(kCanonicalSampleRateHz), path, ": sample rate ", rate,
           " Hz unsupported; the pipeline is fixed at ", kCanonicalSampleRateHz,
           " Hz and does not resample");
  AF_CHECK(!samples.empty(), path, ": empty data chunk");

  Waveform w;
  w.samples = std::move(samples);
  w.sample_rate_hz = static_cast<int>(rate);
  return w;
}

inline void WriteWav(const Waveform& w, const std::string& path) {
  AF_CHECK(!w.samples.empty(), "WriteWav: empty waveform");
  AF_CHECK(w.sample_rate_hz > 0, "WriteWav: bad sample rate");
  std::ofstream os(path, std::ios::binary);
  AF_CHECK(os.good(), "cannot open for writing: ", path);

  const uint32_t data_bytes = static_cast<uint32_t>(w.samples.size() * 2);
  os.write("RIFF", 4);
  WriteU32Le(os, 36 + data_bytes);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  WriteU32Le(os, 16);
  WriteU16Le(os, 1);  // PCM
  WriteU16Le(os, 1);  // mono
  WriteU32Le(os, static_cast<uint32_t>(w.sample_rate_hz));
  WriteU32Le(os, static_cast<uint32_t>(w.sample_rate_hz) * 2);
  WriteU16Le(os, 2);
  WriteU16Le(os, 16);
  os.write("data", 4);
  WriteU32Le(os, data_bytes);
  for (double x : w.samples) {
    // Same 1/32768 scale the reader uses, so values on the 16-bit grid
    // survive unchanged. Clamp then round to nearest; no dithering, so
    // writes are bit-exact functions of the input.
    const long long q = std::llround(std::min(1.0, std::max(-1.0, x)) * 32768.0);
    WriteI16Le(os, static_cast<int16_t>(std::min(32767ll, std::max(-32768ll, q))));
  }
  os.flush();
  AF_CHECK(os.good(), "I/O error while writing: ", path);
}

// --- mu-law companding ---

inline int MuLawEncodeSample(double x, int q_levels) {
  const double mu = static_cast<double>(q_levels - 1);
  const double c = std::min(1.0, std::max(-1.0, x));
  const double y = std::copysign(std::log1p(mu * std::fabs(c)) / std::log1p(mu), c);
  const int level = static_cast<int>(std::floor((y + 1.0) * 0.5 * q_levels));
  return std::min(q_levels - 1, std::max(0, level));
}

inline double MuLawDecodeLevel(int level, int q_levels) {
  const double mu = static_cast<double>(q_levels - 1);
  const double y = 2.0 * (static_cast<double>(level) + 0.5) / static_cast<double>(q_levels) - 1.0;
  return std::copysign((std::pow(1.0 + mu, std::fabs(y)) - 1.0) / mu, y);
}

inline QuantizedWaveform MuLawEncode(const Waveform& w, int q_levels = 256) {
  AF_CHECK(q_levels >= 2, "MuLawEncode: need Q >= 2, got ", q_levels);
  QuantizedWaveform q;
  q.quantization_levels = q_levels;
  q.sample_rate_hz = w.sample_rate_hz;
  q.levels.resize(w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i)
    q.levels[i] = MuLawEncodeSample(w.samples[i], q_levels);
  return q;
}

inline Waveform MuLawDecode(const QuantizedWaveform& q) {
  q.Validate();
  Waveform w;
  w.sample_rate_hz = q.sample_rate_hz;
  w.samples.resize(q.levels.size());
  for (size_t i = 0; i < q.levels.size(); ++i)
    w.samples[i] = MuLawDecodeLevel(q.levels[i], q.quantization_levels);
  return w;
}

// --- synthetic harmonic tones (test fixtures for the converter and f0) ---

// Sum of harmonics k*freq_hz weighted by timbre[k-1], peak-normalized to 0.9.
// Harmonics at or above Nyquist are dropped; each drop is reported through
// the warning channel when one is supplied.
inline Waveform SynthTone(double freq_hz, double duration_s, int sample_rate_hz,
                          const std::vector<double>& timbre,
                          std::vector<std::string>* warnings = nullptr) {
  AF_CHECK(sample_rate_hz > 0, "SynthTone: bad sample rate ", sample_rate_hz);
  const double nyquist = 0.5 * sample_rate_hz;
  AF_CHECK(freq_hz > 0.0 && freq_hz < nyquist, "SynthTone: frequency ", freq_hz,
           " Hz outside (0, ", nyquist, ") at rate ", sample_rate_hz);
  AF_CHECK(!timbre.empty(), "SynthTone: empty timbre");
  const long long n = std::llround(duration_s * sample_rate_hz);
  AF_CHECK(n >= 1, "SynthTone: duration ", duration_s, " s yields no samples");

  std::vector<double> kept_amps;
  std::vector<double> kept_freqs;
  for (size_t k = 0; k < timbre.size(); ++k) {
    const double f = freq_hz * static_cast<double>(k + 1);
    if (f >= nyquist) {
      if (warnings != nullptr)
        warnings->push_back(detail::Str("harmonic ", k + 1, " at ", f,
                                        " Hz aliases (Nyquist ", nyquist, " Hz); dropped"));
      continue;
    }
    kept_amps.push_back(timbre[k]);
    kept_freqs.push_back(f);
  }

  Waveform w;
  w.sample_rate_hz = sample_rate_hz;
  w.samples.assign(static_cast<size_t>(n), 0.0);
  if (kept_amps.empty()) return w;

  double peak = 0.0;
  for (size_t t = 0; t < w.samples.size(); ++t) {
    double s = 0.0;
    for (size_t k = 0; k < kept_amps.size(); ++k)
      s += kept_amps[k] *
           std::sin(2.0 * M_PI * kept_freqs[k] * static_cast<double>(t) / sample_rate_hz);
    w.samples[t] = s;
    peak = std::max(peak, std::fabs(s));
  }
  if (peak > 0.0) {
    const double g = 0.9 / peak;
    for (double& s : w.samples) s *= g;
  }
  return w;
}

}  // namespace augforge

#endif  // AUGFORGE_AUDIO_HPP_
