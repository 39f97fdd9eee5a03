// include/augforge/dsp.hpp

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

#ifndef AUGFORGE_DSP_HPP_
#define AUGFORGE_DSP_HPP_

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <string>
#include <vector>

#include "augforge/audio.hpp"
#include "augforge/common.hpp"

namespace augforge {

// Front-end defaults: 40-band log-mel with a 25 ms Hann window and 10 ms hop.
constexpr int kDefaultMelBands = 40;
constexpr double kDefaultFrameLenS = 0.025;
constexpr double kDefaultFrameHopS = 0.010;
constexpr double kDefaultLogFloor = 1e-10;

// f0 search defaults: 50-500 Hz band, 40 ms analysis window, NCCF voicing
// threshold 0.45.
constexpr double kDefaultF0MinHz = 50.0;
constexpr double kDefaultF0MaxHz = 500.0;
constexpr double kDefaultF0FrameLenS = 0.040;
constexpr double kDefaultF0HopS = 0.010;
constexpr double kDefaultVoicingThreshold = 0.45;

struct MelSpectrogram {
  Matrix frames;          // T x B, natural-log mel energies
  double frame_hop_s = kDefaultFrameHopS;
  double frame_len_s = kDefaultFrameLenS;
  double log_floor = kDefaultLogFloor;

  size_t num_frames() const { return frames.rows; }
  size_t num_bands() const { return frames.cols; }
};

// Per-frame fundamental frequency with voicing flags. f0_hz[t] == 0 exactly
// when voiced[t] is false.
struct F0Track {
  std::vector<double> f0_hz;
  std::vector<bool> voiced;
  double frame_hop_s = kDefaultF0HopS;

  size_t num_frames() const { return f0_hz.size(); }

  void Validate() const {
    AF_CHECK(f0_hz.size() == voiced.size(), "F0Track: f0/voiced length mismatch");
    for (size_t t = 0; t < f0_hz.size(); ++t)
      AF_CHECK(voiced[t] ? f0_hz[t] > 0.0 : f0_hz[t] == 0.0,
               "F0Track: voicing flag inconsistent with f0 at frame ", t);
  }
};

// Number of analysis frames for a signal of num_samples with the given
// window/hop in samples: floor((len - win) / hop) + 1, zero if len < win.
inline size_t NumFrames(size_t num_samples, size_t win, size_t hop) {
  if (num_samples < win) return 0;
  return (num_samples - win) / hop + 1;
}

inline size_t FrameLenSamples(double seconds, int sample_rate_hz) {
  return static_cast<size_t>(std::llround(seconds * sample_rate_hz));
}

// HTK mel scale.
inline double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace detail {

// In-place iterative radix-2 FFT; size must be a power of two.
inline void FftInplace(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Triangular filterbank with mel-spaced corner points over [0, Nyquist].
// Returns a bands x (nfft/2 + 1) weight matrix.
inline Matrix MelFilterbank(int bands, size_t nfft, int sample_rate_hz) {
  const size_t bins = nfft / 2 + 1;
  const double mel_max = HzToMel(0.5 * sample_rate_hz);
  std::vector<double> corner_hz(static_cast<size_t>(bands) + 2);
  for (size_t j = 0; j < corner_hz.size(); ++j)
    corner_hz[j] = MelToHz(mel_max * static_cast<double>(j) / static_cast<double>(bands + 1));

  Matrix fb(static_cast<size_t>(bands), bins, 0.0);
  for (int b = 0; b < bands; ++b) {
    const double lo = corner_hz[b], mid = corner_hz[b + 1], hi = corner_hz[b + 2];
    for (size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate_hz / static_cast<double>(nfft);
      double w = 0.0;
      if (f >= lo && f <= mid && mid > lo)
        w = (f - lo) / (mid - lo);
      else if (f > mid && f <= hi && hi > mid)
        w = (hi - f) / (hi - mid);
      fb(static_cast<size_t>(b), k) = std::max(0.0, w);
    }
  }
  return fb;
}

}  // namespace detail

// Center frequency (Hz) of mel band b out of `bands` spanning 0..Nyquist.
// Exposed so downstream checks can locate bands without building a filterbank.
inline double MelBandCenterHz(int b, int bands, int sample_rate_hz) {
  const double mel_max = HzToMel(0.5 * sample_rate_hz);
  return MelToHz(mel_max * static_cast<double>(b + 1) / static_cast<double>(bands + 1));
}

// Magnitude STFT (periodic Hann) -> triangular mel filterbank -> ln(e + floor).
inline MelSpectrogram LogMel(const Waveform& w, int bands = kDefaultMelBands,
                             double frame_len_s = kDefaultFrameLenS,
                             double frame_hop_s = kDefaultFrameHopS,
                             double log_floor = kDefaultLogFloor) {
  AF_CHECK(bands >= 1, "LogMel: need at least one band");
  AF_CHECK(log_floor > 0.0, "LogMel: log floor must be positive");
  const size_t win = FrameLenSamples(frame_len_s, w.sample_rate_hz);
  const size_t hop = FrameLenSamples(frame_hop_s, w.sample_rate_hz);
  AF_CHECK(win >= 2 && hop >= 1, "LogMel: degenerate window/hop (", win, "/", hop, " samples)");
  AF_CHECK(w.samples.size() >= win, "LogMel: waveform of ", w.samples.size(),
           " samples is shorter than one ", win, "-sample frame");

  const size_t t_frames = NumFrames(w.samples.size(), win, hop);
  const size_t nfft = NextPow2(win);
  const size_t bins = nfft / 2 + 1;

  std::vector<double> hann(win);
  for (size_t n = 0; n < win; ++n)
    hann[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(n) / static_cast<double>(win));

  const Matrix fb = detail::MelFilterbank(bands, nfft, w.sample_rate_hz);

  MelSpectrogram mel;
  mel.frames = Matrix(t_frames, static_cast<size_t>(bands));
  mel.frame_hop_s = frame_hop_s;
  mel.frame_len_s = frame_len_s;
  mel.log_floor = log_floor;

  std::vector<std::complex<double>> buf(nfft);
  std::vector<double> mag(bins);
  for (size_t t = 0; t < t_frames; ++t) {
    const size_t start = t * hop;
    for (size_t n = 0; n < win; ++n) buf[n] = w.samples[start + n] * hann[n];
    for (size_t n = win; n < nfft; ++n) buf[n] = 0.0;
    detail::FftInplace(buf);
    for (size_t k = 0; k < bins; ++k) mag[k] = std::abs(buf[k]);
    for (int b = 0; b < bands; ++b) {
      double e = 0.0;
      const double* wgt = fb.row(static_cast<size_t>(b));
      for (size_t k = 0; k < bins; ++k) e += wgt[k] * mag[k];
      mel.frames(t, static_cast<size_t>(b)) = std::log(e + log_floor);
    }
  }
  return mel;
}

// Per-frame normalized autocorrelation (NCCF) pitch tracker with parabolic
// lag refinement. A frame is voiced iff its best peak reaches the threshold;
// among near-equal peaks the smallest lag wins, which resolves the inherent
// period/2-period ambiguity of periodic signals toward the true fundamental.
inline F0Track EstimateF0(const Waveform& w, double fmin_hz = kDefaultF0MinHz,
                          double fmax_hz = kDefaultF0MaxHz,
                          double frame_len_s = kDefaultF0FrameLenS,
                          double frame_hop_s = kDefaultF0HopS,
                          double voicing_threshold = kDefaultVoicingThreshold) {
  const double nyquist = 0.5 * w.sample_rate_hz;
  AF_CHECK(0.0 < fmin_hz && fmin_hz < fmax_hz && fmax_hz < nyquist,
           "EstimateF0: need 0 < fmin < fmax < Nyquist, got (", fmin_hz, ", ", fmax_hz,
           ") at rate ", w.sample_rate_hz);
  const size_t win = FrameLenSamples(frame_len_s, w.sample_rate_hz);
  const size_t hop = FrameLenSamples(frame_hop_s, w.sample_rate_hz);
  AF_CHECK(win >= 4 && hop >= 1, "EstimateF0: degenerate window/hop");

  const size_t lag_min =
      std::max<size_t>(2, static_cast<size_t>(std::floor(w.sample_rate_hz / fmax_hz)));
  const size_t lag_max = std::min(
      win - 2, static_cast<size_t>(std::ceil(w.sample_rate_hz / fmin_hz)));
  AF_CHECK(lag_max > lag_min + 1, "EstimateF0: window of ", win,
           " samples too short for an f0 search down to ", fmin_hz, " Hz");

  const size_t t_frames = NumFrames(w.samples.size(), win, hop);
  F0Track track;
  track.frame_hop_s = frame_hop_s;
  track.f0_hz.assign(t_frames, 0.0);
  track.voiced.assign(t_frames, false);

  std::vector<double> x(win);
  std::vector<double> r(lag_max + 2, 0.0);
  for (size_t t = 0; t < t_frames; ++t) {
    const size_t start = t * hop;
    double mean = 0.0;
    for (size_t n = 0; n < win; ++n) mean += w.samples[start + n];
    mean /= static_cast<double>(win);
    for (size_t n = 0; n < win; ++n) x[n] = w.samples[start + n] - mean;

    double rmax = 0.0;
    for (size_t lag = lag_min - 1; lag <= std::min(lag_max + 1, win - 1); ++lag) {
      double num = 0.0, e0 = 0.0, e1 = 0.0;
      const size_t m = win - lag;
      for (size_t n = 0; n < m; ++n) {
        num += x[n] * x[n + lag];
        e0 += x[n] * x[n];
        e1 += x[n + lag] * x[n + lag];
      }
      const double denom = std::sqrt(e0 * e1);
      r[lag] = denom > 1e-12 ? num / denom : 0.0;
      if (lag >= lag_min && lag <= lag_max) rmax = std::max(rmax, r[lag]);
    }
    if (rmax < voicing_threshold) continue;

    // Smallest local maximum within 90% of the global peak. r[] covers
    // lag_min-1 .. lag_max+1 so both neighbors are always available.
    size_t best = 0;
    for (size_t lag = lag_min; lag <= lag_max; ++lag) {
      if (r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1] && r[lag] >= 0.9 * rmax &&
          r[lag] >= voicing_threshold) {
        best = lag;
        break;
      }
    }
    if (best == 0) continue;

    double lag_refined = static_cast<double>(best);
    {
      const double denom = r[best - 1] - 2.0 * r[best] + r[best + 1];
      if (std::fabs(denom) > 1e-12) {
        const double delta = 0.5 * (r[best - 1] - r[best + 1]) / denom;
        if (std::fabs(delta) <= 1.0) lag_refined += delta;
      }
    }
    double f0 = w.sample_rate_hz / lag_refined;
    f0 = std::min(fmax_hz, std::max(fmin_hz, f0));
    track.f0_hz[t] = f0;
    track.voiced[t] = true;
  }
  return track;
}

// --- MELF binary matrix file ---
// 16-byte header (magic "MELF", u32 T, u32 B, u32 reserved), then T*B
// little-endian f32, row-major by frame.

inline void WriteMelf(const MelSpectrogram& m, const std::string& path) {
  AF_CHECK(m.frames.rows >= 1 && m.frames.cols >= 1, "WriteMelf: empty spectrogram");
  std::ofstream os(path, std::ios::binary);
  AF_CHECK(os.good(), "cannot open for writing: ", path);
  os.write("MELF", 4);
  WriteU32Le(os, static_cast<uint32_t>(m.frames.rows));
  WriteU32Le(os, static_cast<uint32_t>(m.frames.cols));
  WriteU32Le(os, 0);
  for (double v : m.frames.data) WriteF32Le(os, static_cast<float>(v));
  os.flush();
  AF_CHECK(os.good(), "I/O error while writing: ", path);
}

inline MelSpectrogram ReadMelf(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  AF_CHECK(is.good(), "cannot open MELF file: ", path);
  char magic[4];
  AF_CHECK(ReadBytes(is, magic, 4), "truncated MELF header: ", path);
  AF_CHECK(std::string(magic, 4) == "MELF", path, ": bad MELF magic");
  const uint32_t t = ReadU32Le(is, path + " T");
  const uint32_t b = ReadU32Le(is, path + " B");
  ReadU32Le(is, path + " reserved");
  AF_CHECK(t >= 1 && b >= 1, path, ": degenerate MELF dimensions ", t, "x", b);
  MelSpectrogram m;
  m.frames = Matrix(t, b);
  for (size_t i = 0; i < m.frames.data.size(); ++i)
    m.frames.data[i] = static_cast<double>(ReadF32Le(is, path + " payload"));
  return m;
}

}  // namespace augforge

#endif  // AUGFORGE_DSP_HPP_
