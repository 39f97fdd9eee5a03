// include/augforge/skinconv.hpp

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

// Conditioned-autoencoder voice converter ("skinning"). A strided 1-D conv
// content encoder produces a downsampled latent; a causal dilated conv
// decoder over mu-law levels predicts the input shifted by `shift`,
// conditioned on the latent, an upsampled f0 track, and a learned per-speaker
// embedding (one row of Z). Gradients are computed by hand so the whole model
// stays dependency-free and finite-difference checkable.

#ifndef AUGFORGE_SKINCONV_HPP_
#define AUGFORGE_SKINCONV_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "augforge/audio.hpp"
#include "augforge/common.hpp"
#include "augforge/dsp.hpp"
#include "augforge/rng.hpp"

namespace augforge {

struct ConverterConfig {
  int quantization_levels = 256;  // Q

  // Content encoder: encoder_layers strided conv layers with tanh, the last
  // projecting to latent_dim channels. Total downsample D = stride^layers.
  int encoder_layers = 3;
  int encoder_hidden = 64;
  int encoder_kernel = 8;
  int encoder_stride = 4;
  int latent_dim = 64;

  // Decoder: residual causal dilated conv stack over one-hot mu-law input,
  // dilation 2^l at layer l, a shared conditioning projection added to every
  // layer preactivation, and a linear output head to Q logits.
  int decoder_layers = 8;
  int decoder_hidden = 64;

  int speaker_dim = 32;  // d
  int shift = 1;         // autoregressive target offset

  int sample_rate_hz = kCanonicalSampleRateHz;
  double f0_min_hz = kDefaultF0MinHz;
  double f0_max_hz = kDefaultF0MaxHz;
  double f0_frame_len_s = kDefaultF0FrameLenS;
  double f0_frame_hop_s = kDefaultF0HopS;
  double voicing_threshold = kDefaultVoicingThreshold;

  int TotalDownsample() const {
    int d = 1;
    for (int l = 0; l < encoder_layers; ++l) d *= encoder_stride;
    return d;
  }

  // 1 + sum of dilations = 2^layers for kernel-2 taps.
  int DecoderReceptiveField() const { return 1 << decoder_layers; }

  void Validate() const {
    AF_CHECK(quantization_levels >= 2 && quantization_levels <= 65536,
             "converter: quantization_levels must be in [2, 65536], got ", quantization_levels);
    AF_CHECK(encoder_layers >= 1, "converter: encoder_layers must be >= 1");
    AF_CHECK(encoder_hidden >= 1, "converter: encoder_hidden must be >= 1");
    AF_CHECK(encoder_kernel >= 1, "converter: encoder_kernel must be >= 1");
    AF_CHECK(encoder_stride >= 1, "converter: encoder_stride must be >= 1");
    AF_CHECK(latent_dim >= 1, "converter: latent_dim must be >= 1");
    AF_CHECK(decoder_layers >= 1, "converter: decoder_layers must be >= 1 (receptive field >= 2)");
    AF_CHECK(decoder_layers < 31, "converter: decoder_layers must be < 31");
    AF_CHECK(decoder_hidden >= 1, "converter: decoder_hidden must be >= 1");
    AF_CHECK(speaker_dim >= 1, "converter: speaker_dim must be >= 1");
    AF_CHECK(shift >= 1, "converter: shift must be >= 1");
    AF_CHECK(sample_rate_hz > 0, "converter: sample_rate_hz must be > 0");
    AF_CHECK(f0_min_hz > 0.0 && f0_min_hz < f0_max_hz &&
                 f0_max_hz < 0.5 * static_cast<double>(sample_rate_hz),
             "converter: need 0 < f0_min_hz < f0_max_hz < Nyquist, got [", f0_min_hz, ", ",
             f0_max_hz, "] at rate ", sample_rate_hz);
    AF_CHECK(f0_frame_len_s > 0.0 && f0_frame_hop_s > 0.0 &&
                 f0_frame_hop_s <= f0_frame_len_s,
             "converter: need 0 < f0_frame_hop_s <= f0_frame_len_s");
    AF_CHECK(voicing_threshold >= 0.0 && voicing_threshold <= 1.0,
             "converter: voicing_threshold must be in [0, 1]");
  }
};

struct TrainSample {
  QuantizedWaveform quantized;
  F0Track f0;
  int speaker_index = 0;
  // When non-empty, the decoder reads its autoregressive input from here
  // instead of quantized.levels; targets and the encoder always use the
  // clean levels. The trainer fills this for noisy teacher forcing.
  std::vector<int> input_levels;
};

namespace detail {

// Flat-parameter offsets, in checkpoint declaration order: encoder layers
// (weight then bias each), input embedding, decoder layers (Wcur, Wpast,
// bias), conditioning projections (latent, f0, speaker, bias), output head,
// then the |S| x d speaker matrix Z.
struct ParamLayout {
  struct EncLayer {
    size_t w = 0, b = 0;
    int in_ch = 0, out_ch = 0;
  };
  struct DecLayer {
    size_t wc = 0, wp = 0, b = 0;
  };
  std::vector<EncLayer> enc;
  size_t emb_w = 0, emb_b = 0;                                // H x Q, H
  std::vector<DecLayer> dec;                                  // H x H, H x H, H
  size_t cond_wlat = 0, cond_wf0 = 0, cond_wspk = 0, cond_b = 0;  // H x latent, H x 2, H x d, H
  size_t out_w = 0, out_b = 0;                                // Q x H, Q
  size_t z = 0;                                               // |S| x d
  size_t total = 0;
};

inline ParamLayout MakeLayout(const ConverterConfig& cfg, size_t num_speakers) {
  ParamLayout lay;
  size_t cursor = 0;
  auto alloc = [&cursor](size_t n) {
    const size_t at = cursor;
    cursor += n;
    return at;
  };
  const size_t H = static_cast<size_t>(cfg.decoder_hidden);
  const size_t Q = static_cast<size_t>(cfg.quantization_levels);
  const size_t K = static_cast<size_t>(cfg.encoder_kernel);
  lay.enc.resize(cfg.encoder_layers);
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    ParamLayout::EncLayer& e = lay.enc[l];
    e.in_ch = l == 0 ? 1 : cfg.encoder_hidden;
    e.out_ch = l == cfg.encoder_layers - 1 ? cfg.latent_dim : cfg.encoder_hidden;
    e.w = alloc(static_cast<size_t>(e.out_ch) * e.in_ch * K);
    e.b = alloc(e.out_ch);
  }
  lay.emb_w = alloc(H * Q);
  lay.emb_b = alloc(H);
  lay.dec.resize(cfg.decoder_layers);
  for (int l = 0; l < cfg.decoder_layers; ++l) {
    lay.dec[l].wc = alloc(H * H);
    lay.dec[l].wp = alloc(H * H);
    lay.dec[l].b = alloc(H);
  }
  lay.cond_wlat = alloc(H * cfg.latent_dim);
  lay.cond_wf0 = alloc(H * 2);
  lay.cond_wspk = alloc(H * cfg.speaker_dim);
  lay.cond_b = alloc(H);
  lay.out_w = alloc(Q * H);
  lay.out_b = alloc(Q);
  lay.z = alloc(num_speakers * cfg.speaker_dim);
  lay.total = cursor;
  return lay;
}

}  // namespace detail

struct ConverterModel {
  ConverterConfig config;
  std::vector<std::string> speaker_ids;
  // All learned values, encoder through Z, per detail::MakeLayout.
  std::vector<double> params;

  size_t num_speakers() const { return speaker_ids.size(); }

  detail::ParamLayout layout() const { return detail::MakeLayout(config, num_speakers()); }

  int speaker_index(const std::string& id) const {
    for (size_t i = 0; i < speaker_ids.size(); ++i)
      if (speaker_ids[i] == id) return static_cast<int>(i);
    std::string known;
    for (size_t i = 0; i < speaker_ids.size(); ++i) {
      if (i > 0) known += ", ";
      known += speaker_ids[i];
    }
    AF_FAIL("unknown speaker '", id, "'; known speakers: [", known, "]");
  }

  const double* speaker_embedding(int s) const {
    return params.data() + layout().z + static_cast<size_t>(s) * config.speaker_dim;
  }

  void Validate() const {
    config.Validate();
    AF_CHECK(!speaker_ids.empty(), "converter: speaker table is empty");
    for (size_t i = 0; i < speaker_ids.size(); ++i) {
      AF_CHECK(!speaker_ids[i].empty(), "converter: speaker ", i, " has empty id");
      for (size_t j = i + 1; j < speaker_ids.size(); ++j)
        AF_CHECK(speaker_ids[i] != speaker_ids[j], "converter: duplicate speaker id '",
                 speaker_ids[i], "'");
    }
    const size_t want = layout().total;
    AF_CHECK(params.size() == want, "converter: parameter vector has ", params.size(),
             " entries, layout requires ", want);
    for (size_t i = 0; i < params.size(); ++i)
      AF_CHECK(std::isfinite(params[i]), "converter: parameter ", i, " is not finite");
  }
};

// Fan-in scaled Gaussian weights, zero biases, and a zero output head so the
// untrained model emits uniform logits (initial loss exactly ln Q). Z rows
// are N(0, 0.1^2).
inline ConverterModel InitializeConverter(const ConverterConfig& config,
                                          const std::vector<std::string>& speaker_ids,
                                          uint64_t seed) {
  config.Validate();
  AF_CHECK(!speaker_ids.empty(), "converter init: need at least one speaker");
  ConverterModel model;
  model.config = config;
  model.speaker_ids = speaker_ids;
  const detail::ParamLayout lay = detail::MakeLayout(config, speaker_ids.size());
  model.params.assign(lay.total, 0.0);
  Rng rng(Rng::Derive(seed, seed_stream::kModelInit));

  auto fill_gauss = [&](size_t off, size_t n, double sigma) {
    for (size_t i = 0; i < n; ++i) model.params[off + i] = sigma * rng.NextNormal();
  };
  const size_t H = static_cast<size_t>(config.decoder_hidden);
  const size_t K = static_cast<size_t>(config.encoder_kernel);
  for (const auto& e : lay.enc)
    fill_gauss(e.w, static_cast<size_t>(e.out_ch) * e.in_ch * K,
               1.0 / std::sqrt(static_cast<double>(e.in_ch) * K));
  fill_gauss(lay.emb_w, H * config.quantization_levels, 1.0);
  for (const auto& d : lay.dec) {
    fill_gauss(d.wc, H * H, 1.0 / std::sqrt(static_cast<double>(H)));
    fill_gauss(d.wp, H * H, 1.0 / std::sqrt(static_cast<double>(H)));
  }
  fill_gauss(lay.cond_wlat, H * config.latent_dim,
             1.0 / std::sqrt(static_cast<double>(config.latent_dim)));
  fill_gauss(lay.cond_wf0, H * 2, 1.0 / std::sqrt(2.0));
  fill_gauss(lay.cond_wspk, H * config.speaker_dim,
             1.0 / std::sqrt(static_cast<double>(config.speaker_dim)));
  fill_gauss(lay.z, speaker_ids.size() * config.speaker_dim, 0.1);
  // out_w, out_b and all biases stay zero.
  return model;
}

// Overwrites every parameter (output head and biases included) with
// N(0, sigma^2) draws. Gradient-check fixtures use this so no gradient is
// structurally zero by initialization.
inline void RandomizeParams(ConverterModel* model, uint64_t seed, double sigma = 0.3) {
  Rng rng(Rng::Derive(seed, seed_stream::kModelInit));
  for (double& p : model->params) p = sigma * rng.NextNormal();
}

namespace detail {

// Two conditioning channels per sample: linearly interpolated log-f0 (zero
// where unvoiced) and the voicing flag interpolated the same way. Frame f
// sits at sample f * hop + win / 2; positions outside the frame grid clamp
// to the edge frames.
inline Matrix F0Channels(const F0Track& track, size_t num_samples, int sample_rate_hz,
                         double frame_len_s) {
  track.Validate();
  const size_t frames = track.f0_hz.size();
  const double hop = track.frame_hop_s * sample_rate_hz;
  const double half_win = 0.5 * frame_len_s * sample_rate_hz;
  Matrix out(num_samples, 2);
  for (size_t t = 0; t < num_samples; ++t) {
    double pos = (static_cast<double>(t) - half_win) / hop;
    pos = std::clamp(pos, 0.0, static_cast<double>(frames - 1));
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, frames - 1);
    const double frac = pos - static_cast<double>(lo);
    const double logf_lo = track.voiced[lo] ? std::log(track.f0_hz[lo]) : 0.0;
    const double logf_hi = track.voiced[hi] ? std::log(track.f0_hz[hi]) : 0.0;
    const double v_lo = track.voiced[lo] ? 1.0 : 0.0;
    const double v_hi = track.voiced[hi] ? 1.0 : 0.0;
    out(t, 0) = (1.0 - frac) * logf_lo + frac * logf_hi;
    out(t, 1) = (1.0 - frac) * v_lo + frac * v_hi;
  }
  return out;
}

// Strided conv layer with zero padding on the right: out[t] covers input
// window [stride*t, stride*t + kernel), out_len = ceil(in_len / stride).
inline Matrix EncoderLayerForward(const Matrix& in, const double* w, const double* b, int out_ch,
                                  int kernel, int stride) {
  const size_t in_len = in.rows;
  const int in_ch = static_cast<int>(in.cols);
  const size_t out_len = (in_len + stride - 1) / static_cast<size_t>(stride);
  Matrix out(out_len, out_ch);
  for (size_t t = 0; t < out_len; ++t) {
    const size_t base = t * static_cast<size_t>(stride);
    for (int o = 0; o < out_ch; ++o) {
      double acc = b[o];
      const double* wo = w + static_cast<size_t>(o) * in_ch * kernel;
      for (int i = 0; i < in_ch; ++i)
        for (int k = 0; k < kernel; ++k) {
          const size_t idx = base + static_cast<size_t>(k);
          if (idx < in_len) acc += wo[static_cast<size_t>(i) * kernel + k] * in(idx, i);
        }
      out(t, o) = std::tanh(acc);
    }
  }
  return out;
}

// Everything the backward pass needs from one teacher-forced (or generated)
// pass. Decoder arrays cover steps 0..M-1 where M = len - shift.
struct Trace {
  std::vector<int> levels;         // clean levels, full length; encoder input and targets
  std::vector<int> in_levels;      // decoder AR input stream, full length
  Matrix f0c;                      // M x 2
  std::vector<Matrix> enc;         // enc[0] = x as len x 1, then per-layer outputs
  Matrix cond;                     // M x H
  std::vector<Matrix> h;           // h[0..L], each M x H
  size_t steps = 0;                // M
  double loss = 0.0;
};

// Advances every decoder layer at step t given the input level. h rows at
// t - dilation must already be filled (zero history below t = 0).
inline void DecoderStep(const ConverterModel& model, const ParamLayout& lay, const Matrix& cond,
                        std::vector<Matrix>* h, size_t t, int level) {
  const int H = model.config.decoder_hidden;
  const double* P = model.params.data();
  {
    const double* col = P + lay.emb_w;  // H x Q, row-major over q
    const double* b = P + lay.emb_b;
    const size_t Q = static_cast<size_t>(model.config.quantization_levels);
    for (int j = 0; j < H; ++j)
      (*h)[0](t, j) = col[static_cast<size_t>(j) * Q + static_cast<size_t>(level)] + b[j];
  }
  for (int l = 0; l < model.config.decoder_layers; ++l) {
    const size_t g = size_t{1} << l;
    const double* wc = P + lay.dec[l].wc;
    const double* wp = P + lay.dec[l].wp;
    const double* b = P + lay.dec[l].b;
    const Matrix& hl = (*h)[l];
    Matrix& hn = (*h)[l + 1];
    const bool has_past = t >= g;
    for (int j = 0; j < H; ++j) {
      double acc = b[j] + cond(t, j);
      const double* wcj = wc + static_cast<size_t>(j) * H;
      for (int k = 0; k < H; ++k) acc += wcj[k] * hl(t, k);
      if (has_past) {
        const double* wpj = wp + static_cast<size_t>(j) * H;
        for (int k = 0; k < H; ++k) acc += wpj[k] * hl(t - g, k);
      }
      hn(t, j) = hl(t, j) + std::tanh(acc);
    }
  }
}

inline void OutputLogits(const ConverterModel& model, const ParamLayout& lay, const Matrix& h_top,
                         size_t t, std::vector<double>* logits) {
  const int H = model.config.decoder_hidden;
  const int Q = model.config.quantization_levels;
  const double* w = model.params.data() + lay.out_w;
  const double* b = model.params.data() + lay.out_b;
  logits->resize(Q);
  for (int c = 0; c < Q; ++c) {
    double acc = b[c];
    const double* wc = w + static_cast<size_t>(c) * H;
    for (int j = 0; j < H; ++j) acc += wc[j] * h_top(t, j);
    (*logits)[c] = acc;
  }
}

// log(sum exp) and softmax in one pass; returns logsumexp, fills probs.
inline double SoftmaxInplace(std::vector<double>* logits) {
  double mx = (*logits)[0];
  for (double v : *logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : *logits) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  for (double& v : *logits) v = std::exp(v - lse);
  return lse;
}

inline void ValidateSample(const ConverterModel& model, const TrainSample& sample) {
  sample.quantized.Validate();
  AF_CHECK(sample.quantized.quantization_levels == model.config.quantization_levels,
           "sample quantized with Q=", sample.quantized.quantization_levels,
           " but model expects Q=", model.config.quantization_levels);
  AF_CHECK(sample.quantized.sample_rate_hz == model.config.sample_rate_hz,
           "sample rate ", sample.quantized.sample_rate_hz, " != model rate ",
           model.config.sample_rate_hz);
  AF_CHECK(sample.speaker_index >= 0 &&
               static_cast<size_t>(sample.speaker_index) < model.num_speakers(),
           "speaker_index ", sample.speaker_index, " outside table of size ",
           model.num_speakers());
  const size_t len = sample.quantized.levels.size();
  AF_CHECK(len > static_cast<size_t>(model.config.shift), "sample of ", len,
           " samples is too short for shift ", model.config.shift);
  if (!sample.input_levels.empty()) {
    AF_CHECK(sample.input_levels.size() == len, "sample has ", sample.input_levels.size(),
             " input levels for ", len, " target levels");
    for (int v : sample.input_levels)
      AF_CHECK(v >= 0 && v < model.config.quantization_levels, "input level ", v,
               " outside [0, ", model.config.quantization_levels, ")");
  }
  const size_t win = FrameLenSamples(model.config.f0_frame_len_s, model.config.sample_rate_hz);
  const size_t hop = FrameLenSamples(model.config.f0_frame_hop_s, model.config.sample_rate_hz);
  const size_t want_frames = NumFrames(len, win, hop);
  AF_CHECK(want_frames >= 1, "sample of ", len, " samples is shorter than one f0 frame (", win,
           " samples)");
  AF_CHECK(sample.f0.f0_hz.size() == want_frames, "f0 track has ", sample.f0.f0_hz.size(),
           " frames but audio of ", len, " samples implies ", want_frames);
}

// Teacher-forced pass. Fills the trace through the top of the decoder and
// computes the mean cross-entropy against levels shifted by `shift`.
inline Trace ForwardTeacherForced(const ConverterModel& model, const TrainSample& sample) {
  ValidateSample(model, sample);
  const ConverterConfig& cfg = model.config;
  const ParamLayout lay = model.layout();
  const double* P = model.params.data();

  Trace tr;
  tr.levels = sample.quantized.levels;
  tr.in_levels = sample.input_levels.empty() ? sample.quantized.levels : sample.input_levels;
  const size_t len = tr.levels.size();
  const size_t M = len - static_cast<size_t>(cfg.shift);
  tr.steps = M;

  tr.enc.reserve(cfg.encoder_layers + 1);
  Matrix x(len, 1);
  for (size_t t = 0; t < len; ++t) x(t, 0) = MuLawDecodeLevel(tr.levels[t], cfg.quantization_levels);
  tr.enc.push_back(std::move(x));
  for (int l = 0; l < cfg.encoder_layers; ++l)
    tr.enc.push_back(EncoderLayerForward(tr.enc.back(), P + lay.enc[l].w, P + lay.enc[l].b,
                                         lay.enc[l].out_ch, cfg.encoder_kernel,
                                         cfg.encoder_stride));
  const Matrix& latent = tr.enc.back();

  const Matrix f0_full = F0Channels(sample.f0, M, cfg.sample_rate_hz, cfg.f0_frame_len_s);
  tr.f0c = f0_full;

  const int H = cfg.decoder_hidden;
  const size_t D = static_cast<size_t>(cfg.TotalDownsample());
  tr.cond = Matrix(M, H);
  const double* wlat = P + lay.cond_wlat;
  const double* wf0 = P + lay.cond_wf0;
  const double* wspk = P + lay.cond_wspk;
  const double* bc = P + lay.cond_b;
  const double* z = model.speaker_embedding(sample.speaker_index);
  std::vector<double> spk_part(H);
  for (int j = 0; j < H; ++j) {
    double acc = bc[j];
    const double* wj = wspk + static_cast<size_t>(j) * cfg.speaker_dim;
    for (int m = 0; m < cfg.speaker_dim; ++m) acc += wj[m] * z[m];
    spk_part[j] = acc;
  }
  for (size_t t = 0; t < M; ++t) {
    const size_t tl = std::min(t / D, latent.rows - 1);
    for (int j = 0; j < H; ++j) {
      double acc = spk_part[j];
      const double* wj = wlat + static_cast<size_t>(j) * cfg.latent_dim;
      for (int m = 0; m < cfg.latent_dim; ++m) acc += wj[m] * latent(tl, m);
      acc += wf0[static_cast<size_t>(j) * 2] * tr.f0c(t, 0);
      acc += wf0[static_cast<size_t>(j) * 2 + 1] * tr.f0c(t, 1);
      tr.cond(t, j) = acc;
    }
  }

  tr.h.assign(cfg.decoder_layers + 1, Matrix(M, H));
  std::vector<double> logits;
  double ce_sum = 0.0;
  for (size_t t = 0; t < M; ++t) {
    DecoderStep(model, lay, tr.cond, &tr.h, t, tr.in_levels[t]);
    OutputLogits(model, lay, tr.h.back(), t, &logits);
    const int target = tr.levels[t + cfg.shift];
    const double logit_target = logits[target];
    const double lse = SoftmaxInplace(&logits);
    ce_sum += lse - logit_target;
  }
  tr.loss = ce_sum / static_cast<double>(M);
  return tr;
}

}  // namespace detail

inline double Loss(const ConverterModel& model, const TrainSample& sample) {
  return detail::ForwardTeacherForced(model, sample).loss;
}

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as ConverterModel::params
};

// Exact gradients of Loss for every parameter. Only the sample speaker's Z
// row is touched; all other rows get exactly zero.
inline LossGrad LossGradient(const ConverterModel& model, const TrainSample& sample) {
  const detail::Trace tr = detail::ForwardTeacherForced(model, sample);
  const ConverterConfig& cfg = model.config;
  const detail::ParamLayout lay = model.layout();
  const double* P = model.params.data();
  const int H = cfg.decoder_hidden;
  const int Q = cfg.quantization_levels;
  const size_t M = tr.steps;
  const double inv_m = 1.0 / static_cast<double>(M);

  LossGrad out;
  out.loss = tr.loss;
  out.grad.assign(model.params.size(), 0.0);
  double* G = out.grad.data();

  // Output head; logits are recomputed per step rather than stored.
  Matrix dh(M, H);
  std::vector<double> logits;
  for (size_t t = 0; t < M; ++t) {
    detail::OutputLogits(model, lay, tr.h.back(), t, &logits);
    detail::SoftmaxInplace(&logits);  // logits now holds probabilities
    logits[tr.levels[t + cfg.shift]] -= 1.0;
    const double* wout = P + lay.out_w;
    for (int c = 0; c < Q; ++c) {
      const double dl = logits[c] * inv_m;
      if (dl == 0.0) continue;
      G[lay.out_b + c] += dl;
      double* gw = G + lay.out_w + static_cast<size_t>(c) * H;
      const double* wc = wout + static_cast<size_t>(c) * H;
      for (int j = 0; j < H; ++j) {
        gw[j] += dl * tr.h.back()(t, j);
        dh(t, j) += dl * wc[j];
      }
    }
  }

  // Decoder stack, top down. tanh' is recovered from the residual increment.
  Matrix dcond(M, H);
  std::vector<double> dpre(H);
  for (int l = cfg.decoder_layers - 1; l >= 0; --l) {
    Matrix dh_low(M, H);
    const size_t g = size_t{1} << l;
    const double* wc = P + lay.dec[l].wc;
    const double* wp = P + lay.dec[l].wp;
    const Matrix& hl = tr.h[l];
    const Matrix& hn = tr.h[l + 1];
    for (size_t t = 0; t < M; ++t) {
      for (int j = 0; j < H; ++j) {
        const double u = hn(t, j) - hl(t, j);
        dpre[j] = dh(t, j) * (1.0 - u * u);
      }
      const bool has_past = t >= g;
      for (int j = 0; j < H; ++j) {
        const double dp = dpre[j];
        if (dp == 0.0) continue;
        G[lay.dec[l].b + j] += dp;
        dcond(t, j) += dp;
        double* gwc = G + lay.dec[l].wc + static_cast<size_t>(j) * H;
        const double* wcj = wc + static_cast<size_t>(j) * H;
        for (int k = 0; k < H; ++k) {
          gwc[k] += dp * hl(t, k);
          dh_low(t, k) += dp * wcj[k];
        }
        if (has_past) {
          double* gwp = G + lay.dec[l].wp + static_cast<size_t>(j) * H;
          const double* wpj = wp + static_cast<size_t>(j) * H;
          for (int k = 0; k < H; ++k) {
            gwp[k] += dp * hl(t - g, k);
            dh_low(t - g, k) += dp * wpj[k];
          }
        }
      }
      for (int j = 0; j < H; ++j) dh_low(t, j) += dh(t, j);  // residual path
    }
    dh = std::move(dh_low);
  }

  // Input embedding.
  for (size_t t = 0; t < M; ++t) {
    const int level = tr.in_levels[t];
    for (int j = 0; j < H; ++j) {
      const double d = dh(t, j);
      G[lay.emb_w + static_cast<size_t>(j) * Q + level] += d;
      G[lay.emb_b + j] += d;
    }
  }

  // Conditioning projections and the latent upsample (index holding).
  const Matrix& latent = tr.enc.back();
  Matrix dlat(latent.rows, latent.cols);
  const size_t D = static_cast<size_t>(cfg.TotalDownsample());
  const double* wlat = P + lay.cond_wlat;
  const double* wspk = P + lay.cond_wspk;
  const double* z = model.speaker_embedding(sample.speaker_index);
  double* gz = G + lay.z + static_cast<size_t>(sample.speaker_index) * cfg.speaker_dim;
  for (size_t t = 0; t < M; ++t) {
    const size_t tl = std::min(t / D, latent.rows - 1);
    for (int j = 0; j < H; ++j) {
      const double dc = dcond(t, j);
      if (dc == 0.0) continue;
      G[lay.cond_b + j] += dc;
      double* gwl = G + lay.cond_wlat + static_cast<size_t>(j) * cfg.latent_dim;
      const double* wlj = wlat + static_cast<size_t>(j) * cfg.latent_dim;
      for (int m = 0; m < cfg.latent_dim; ++m) {
        gwl[m] += dc * latent(tl, m);
        dlat(tl, m) += dc * wlj[m];
      }
      G[lay.cond_wf0 + static_cast<size_t>(j) * 2] += dc * tr.f0c(t, 0);
      G[lay.cond_wf0 + static_cast<size_t>(j) * 2 + 1] += dc * tr.f0c(t, 1);
      double* gws = G + lay.cond_wspk + static_cast<size_t>(j) * cfg.speaker_dim;
      const double* wsj = wspk + static_cast<size_t>(j) * cfg.speaker_dim;
      for (int m = 0; m < cfg.speaker_dim; ++m) {
        gws[m] += dc * z[m];
        gz[m] += dc * wsj[m];
      }
    }
  }

  // Encoder stack, top down.
  Matrix da = std::move(dlat);
  for (int l = cfg.encoder_layers - 1; l >= 0; --l) {
    const Matrix& a_in = tr.enc[l];
    const Matrix& a_out = tr.enc[l + 1];
    Matrix da_low(a_in.rows, a_in.cols);
    const int in_ch = lay.enc[l].in_ch;
    const int out_ch = lay.enc[l].out_ch;
    const double* w = P + lay.enc[l].w;
    for (size_t t = 0; t < a_out.rows; ++t) {
      const size_t base = t * static_cast<size_t>(cfg.encoder_stride);
      for (int o = 0; o < out_ch; ++o) {
        const double y = a_out(t, o);
        const double dp = da(t, o) * (1.0 - y * y);
        if (dp == 0.0) continue;
        G[lay.enc[l].b + o] += dp;
        const double* wo = w + static_cast<size_t>(o) * in_ch * cfg.encoder_kernel;
        double* gwo = G + lay.enc[l].w + static_cast<size_t>(o) * in_ch * cfg.encoder_kernel;
        for (int i = 0; i < in_ch; ++i)
          for (int k = 0; k < cfg.encoder_kernel; ++k) {
            const size_t idx = base + static_cast<size_t>(k);
            if (idx >= a_in.rows) break;
            gwo[static_cast<size_t>(i) * cfg.encoder_kernel + k] += dp * a_in(idx, i);
            da_low(idx, i) += dp * wo[static_cast<size_t>(i) * cfg.encoder_kernel + k];
          }
      }
    }
    da = std::move(da_low);
  }
  // da now holds dLoss/dx, which has no parameters behind it.

  return out;
}

// Corpus loss is the mean of per-sample losses, reduced pairwise so the
// result does not depend on accumulation chunking.
inline double CorpusLoss(const ConverterModel& model, const std::vector<TrainSample>& corpus) {
  AF_CHECK(!corpus.empty(), "corpus loss: empty corpus");
  std::vector<double> losses(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) losses[i] = Loss(model, corpus[i]);
  return PairwiseMean(losses);
}

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 1e-3;
  double grad_clip_norm = 5.0;  // <= 0 disables clipping
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // Per-step training window in samples, snapped to the f0 frame hop so the
  // precomputed track can be sliced instead of re-estimated. 0 trains on
  // whole utterances.
  int crop_samples = 2048;
  // Noisy teacher forcing: each decoder input level is jittered by up to
  // +/- input_noise_radius with this probability (targets stay clean).
  // Free-running generation feeds the model its own slightly-off history,
  // and training on perturbed inputs teaches it to pull back to the data
  // instead of drifting to a private limit cycle. 0 disables.
  double input_noise_prob = 0.0;
  int input_noise_radius = 8;
  uint64_t seed = 0;
  int log_every = 0;  // epochs between info-level loss lines; 0 = silent

  void Validate() const {
    AF_CHECK(epochs >= 0, "train: epochs must be >= 0");
    AF_CHECK(learning_rate > 0.0, "train: learning_rate must be > 0");
    AF_CHECK(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "train: adam_beta1 must be in [0, 1)");
    AF_CHECK(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "train: adam_beta2 must be in [0, 1)");
    AF_CHECK(adam_eps > 0.0, "train: adam_eps must be > 0");
    AF_CHECK(crop_samples >= 0, "train: crop_samples must be >= 0");
    AF_CHECK(input_noise_prob >= 0.0 && input_noise_prob <= 1.0,
             "train: input_noise_prob must be in [0, 1]");
    AF_CHECK(input_noise_radius >= 1, "train: input_noise_radius must be >= 1");
  }
};

struct TrainResult {
  double initial_corpus_loss = 0.0;           // before any update, full utterances
  double final_corpus_loss = 0.0;             // after the last epoch, full utterances
  std::vector<double> epoch_mean_loss;        // mean per-step loss within each epoch
};

namespace detail {

struct AdamState {
  std::vector<double> m, v;
  int64_t step = 0;

  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}

  void Update(std::vector<double>* params, const std::vector<double>& grad,
              const TrainConfig& cfg) {
    ++step;
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double corr1 = 1.0 - std::pow(b1, static_cast<double>(step));
    const double corr2 = 1.0 - std::pow(b2, static_cast<double>(step));
    for (size_t i = 0; i < params->size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      (*params)[i] -=
          cfg.learning_rate * (m[i] / corr1) / (std::sqrt(v[i] / corr2) + cfg.adam_eps);
    }
  }
};

inline void ClipGradNorm(std::vector<double>* grad, double max_norm) {
  if (max_norm <= 0.0) return;
  double ss = 0.0;
  for (double g : *grad) ss += g * g;
  const double norm = std::sqrt(ss);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : *grad) g *= scale;
  }
}

// Window of `crop` samples starting at a frame-hop multiple, with the f0
// track sliced to the frames fully inside the window. Frame windows are
// unchanged by the slice, so the result matches re-estimation bit for bit.
inline TrainSample CropForTraining(const TrainSample& sample, const ConverterConfig& cfg,
                                   int crop, Rng* rng) {
  const size_t len = sample.quantized.levels.size();
  if (crop <= 0 || len <= static_cast<size_t>(crop)) return sample;
  const size_t hop = FrameLenSamples(cfg.f0_frame_hop_s, cfg.sample_rate_hz);
  const size_t win = FrameLenSamples(cfg.f0_frame_len_s, cfg.sample_rate_hz);
  const size_t crop_len = static_cast<size_t>(crop);
  AF_CHECK(crop_len >= win, "train: crop_samples (", crop,
           ") is shorter than one f0 frame (", win, " samples)");
  const size_t max_start = ((len - crop_len) / hop) * hop;
  const size_t start = hop * rng->NextBelow(max_start / hop + 1);

  TrainSample out;
  out.speaker_index = sample.speaker_index;
  out.quantized.quantization_levels = sample.quantized.quantization_levels;
  out.quantized.sample_rate_hz = sample.quantized.sample_rate_hz;
  out.quantized.levels.assign(sample.quantized.levels.begin() + start,
                              sample.quantized.levels.begin() + start + crop_len);
  if (!sample.input_levels.empty())
    out.input_levels.assign(sample.input_levels.begin() + start,
                            sample.input_levels.begin() + start + crop_len);
  const size_t frame0 = start / hop;
  const size_t nframes = NumFrames(crop_len, win, hop);
  out.f0.frame_hop_s = sample.f0.frame_hop_s;
  out.f0.f0_hz.assign(sample.f0.f0_hz.begin() + frame0, sample.f0.f0_hz.begin() + frame0 + nframes);
  out.f0.voiced.assign(sample.f0.voiced.begin() + frame0,
                       sample.f0.voiced.begin() + frame0 + nframes);
  return out;
}

}  // namespace detail

// One Adam step per sample, samples shuffled each epoch, optional random
// crops. Deterministic given the seed; aborts on a non-finite loss.
inline TrainResult Train(ConverterModel* model, const std::vector<TrainSample>& corpus,
                         const TrainConfig& cfg) {
  cfg.Validate();
  model->Validate();
  AF_CHECK(!corpus.empty(), "train: empty corpus");
  for (size_t i = 0; i < corpus.size(); ++i) detail::ValidateSample(*model, corpus[i]);

  TrainResult result;
  result.initial_corpus_loss = CorpusLoss(*model, corpus);
  AF_CHECK(std::isfinite(result.initial_corpus_loss), "train: initial corpus loss is not finite");

  Rng rng(Rng::Derive(cfg.seed, seed_stream::kTrain));
  detail::AdamState adam(model->params.size());
  std::vector<size_t> order(corpus.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.Shuffle(order);
    std::vector<double> step_losses;
    step_losses.reserve(order.size());
    for (size_t idx : order) {
      TrainSample cropped =
          detail::CropForTraining(corpus[idx], model->config, cfg.crop_samples, &rng);
      if (cfg.input_noise_prob > 0.0) {
        cropped.input_levels = cropped.quantized.levels;
        const int top = model->config.quantization_levels - 1;
        for (int& v : cropped.input_levels)
          if (rng.Bernoulli(cfg.input_noise_prob))
            v = std::clamp(
                v + static_cast<int>(rng.NextInt(-cfg.input_noise_radius, cfg.input_noise_radius)),
                0, top);
      }
      LossGrad lg = LossGradient(*model, cropped);
      AF_CHECK(std::isfinite(lg.loss), "train: non-finite loss at epoch ", epoch, " sample ", idx);
      detail::ClipGradNorm(&lg.grad, cfg.grad_clip_norm);
      adam.Update(&model->params, lg.grad, cfg);
      step_losses.push_back(lg.loss);
    }
    result.epoch_mean_loss.push_back(PairwiseMean(step_losses));
    if (cfg.log_every > 0 && (epoch + 1) % cfg.log_every == 0)
      LogInfo("train epoch ", epoch + 1, "/", cfg.epochs, " mean loss ",
              result.epoch_mean_loss.back());
  }
  result.final_corpus_loss = CorpusLoss(*model, corpus);
  return result;
}

struct ConvertOptions {
  // Greedy argmax by default; sampling from the softmax is available for
  // listening experiments but makes outputs seed-dependent.
  bool sample = false;
  uint64_t seed = 0;
};

struct ConvertResult {
  Waveform audio;
  // Mean negative log-probability of the emitted path under the model.
  double path_cross_entropy = 0.0;
  size_t steps = 0;
};

// Autoregressive conversion: encode the source, estimate its f0, condition
// on the target speaker's embedding, and decode level by level. The first
// `shift` levels are primed from the source so output length always equals
// input length.
inline ConvertResult Convert(const ConverterModel& model, const Waveform& input,
                             const std::string& target_speaker, const ConvertOptions& opt = {}) {
  model.Validate();
  input.Validate();
  const ConverterConfig& cfg = model.config;
  AF_CHECK(input.sample_rate_hz == cfg.sample_rate_hz, "convert: input rate ",
           input.sample_rate_hz, " != model rate ", cfg.sample_rate_hz);
  const int target = model.speaker_index(target_speaker);

  const QuantizedWaveform q = MuLawEncode(input, cfg.quantization_levels);
  const F0Track f0 = EstimateF0(input, cfg.f0_min_hz, cfg.f0_max_hz, cfg.f0_frame_len_s,
                                cfg.f0_frame_hop_s, cfg.voicing_threshold);

  // Reuse the teacher-forced plumbing for validation and conditioning by
  // staging a sample under the target speaker, then overwrite the decoding
  // loop with generated levels.
  TrainSample staged{q, f0, target};
  detail::ValidateSample(model, staged);
  const detail::ParamLayout lay = model.layout();
  const double* P = model.params.data();
  const size_t len = q.levels.size();
  const size_t M = len - static_cast<size_t>(cfg.shift);
  const int H = cfg.decoder_hidden;

  Matrix x(len, 1);
  for (size_t t = 0; t < len; ++t) x(t, 0) = MuLawDecodeLevel(q.levels[t], cfg.quantization_levels);
  std::vector<Matrix> enc;
  enc.push_back(std::move(x));
  for (int l = 0; l < cfg.encoder_layers; ++l)
    enc.push_back(detail::EncoderLayerForward(enc.back(), P + lay.enc[l].w, P + lay.enc[l].b,
                                              lay.enc[l].out_ch, cfg.encoder_kernel,
                                              cfg.encoder_stride));
  const Matrix& latent = enc.back();
  const Matrix f0c = detail::F0Channels(f0, M, cfg.sample_rate_hz, cfg.f0_frame_len_s);

  Matrix cond(M, H);
  {
    const double* wlat = P + lay.cond_wlat;
    const double* wf0 = P + lay.cond_wf0;
    const double* wspk = P + lay.cond_wspk;
    const double* bc = P + lay.cond_b;
    const double* z = model.speaker_embedding(target);
    const size_t D = static_cast<size_t>(cfg.TotalDownsample());
    std::vector<double> spk_part(H);
    for (int j = 0; j < H; ++j) {
      double acc = bc[j];
      const double* wj = wspk + static_cast<size_t>(j) * cfg.speaker_dim;
      for (int m = 0; m < cfg.speaker_dim; ++m) acc += wj[m] * z[m];
      spk_part[j] = acc;
    }
    for (size_t t = 0; t < M; ++t) {
      const size_t tl = std::min(t / D, latent.rows - 1);
      for (int j = 0; j < H; ++j) {
        double acc = spk_part[j];
        const double* wj = wlat + static_cast<size_t>(j) * cfg.latent_dim;
        for (int m = 0; m < cfg.latent_dim; ++m) acc += wj[m] * latent(tl, m);
        acc += wf0[static_cast<size_t>(j) * 2] * f0c(t, 0);
        acc += wf0[static_cast<size_t>(j) * 2 + 1] * f0c(t, 1);
        cond(t, j) = acc;
      }
    }
  }

  std::vector<int> out_levels(len, 0);
  for (int t = 0; t < cfg.shift; ++t) out_levels[t] = q.levels[t];

  std::vector<Matrix> h(cfg.decoder_layers + 1, Matrix(M, H));
  Rng rng(Rng::Derive(opt.seed, seed_stream::kAugmentSample));
  std::vector<double> logits;
  double ce_sum = 0.0;
  for (size_t t = 0; t < M; ++t) {
    detail::DecoderStep(model, lay, cond, &h, t, out_levels[t]);
    detail::OutputLogits(model, lay, h.back(), t, &logits);
    detail::SoftmaxInplace(&logits);  // logits -> probabilities
    int choice = 0;
    if (opt.sample) {
      double u = rng.NextDouble(), acc = 0.0;
      for (int c = 0; c < cfg.quantization_levels; ++c) {
        acc += logits[c];
        if (u < acc || c == cfg.quantization_levels - 1) {
          choice = c;
          break;
        }
      }
    } else {
      for (int c = 1; c < cfg.quantization_levels; ++c)
        if (logits[c] > logits[choice]) choice = c;
    }
    ce_sum += -std::log(std::max(logits[choice], 1e-300));
    out_levels[t + cfg.shift] = choice;
  }

  QuantizedWaveform qo;
  qo.levels = std::move(out_levels);
  qo.quantization_levels = cfg.quantization_levels;
  qo.sample_rate_hz = cfg.sample_rate_hz;

  ConvertResult result;
  result.steps = M;
  result.path_cross_entropy = ce_sum / static_cast<double>(M);
  result.audio = MuLawDecode(qo);
  return result;
}

struct FinetuneConfig {
  TrainConfig train;
  std::string speaker_id;       // empty = auto "speaker_<index>"
  bool freeze_base = true;      // optimize only the new Z row
  double init_sigma = 0.1;
};

// Appends one freshly initialized Z row and optimizes it (only it, unless
// freeze_base is off) on the new speaker's corpus. Returns the new row's
// index; the id is recorded in the speaker table.
inline int FinetuneNewSpeaker(ConverterModel* model,
                              const std::vector<std::pair<QuantizedWaveform, F0Track>>& corpus,
                              const FinetuneConfig& cfg, TrainResult* result = nullptr) {
  model->Validate();
  cfg.train.Validate();
  AF_CHECK(!corpus.empty(), "finetune: empty corpus");

  const int new_index = static_cast<int>(model->num_speakers());
  std::string id = cfg.speaker_id.empty() ? detail::Str("speaker_", new_index) : cfg.speaker_id;
  for (const std::string& existing : model->speaker_ids)
    AF_CHECK(existing != id, "finetune: speaker id '", id, "' already in table");

  model->speaker_ids.push_back(id);
  Rng init_rng(Rng::Derive(cfg.train.seed, seed_stream::kFinetune));
  for (int m = 0; m < model->config.speaker_dim; ++m)
    model->params.push_back(cfg.init_sigma * init_rng.NextNormal());

  std::vector<TrainSample> samples;
  samples.reserve(corpus.size());
  for (const auto& [q, f0] : corpus) {
    samples.push_back(TrainSample{q, f0, new_index});
    detail::ValidateSample(*model, samples.back());
  }

  const detail::ParamLayout lay = model->layout();
  const size_t row_off = lay.z + static_cast<size_t>(new_index) * model->config.speaker_dim;
  const size_t row_len = static_cast<size_t>(model->config.speaker_dim);

  TrainResult local;
  local.initial_corpus_loss = CorpusLoss(*model, samples);
  Rng rng(Rng::Derive(cfg.train.seed, seed_stream::kTrain));
  detail::AdamState adam(model->params.size());
  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < cfg.train.epochs; ++epoch) {
    rng.Shuffle(order);
    std::vector<double> step_losses;
    for (size_t idx : order) {
      const TrainSample cropped =
          detail::CropForTraining(samples[idx], model->config, cfg.train.crop_samples, &rng);
      LossGrad lg = LossGradient(*model, cropped);
      AF_CHECK(std::isfinite(lg.loss), "finetune: non-finite loss at epoch ", epoch, " sample ",
               idx);
      if (cfg.freeze_base) {
        for (size_t i = 0; i < lg.grad.size(); ++i)
          if (i < row_off || i >= row_off + row_len) lg.grad[i] = 0.0;
      }
      detail::ClipGradNorm(&lg.grad, cfg.train.grad_clip_norm);
      adam.Update(&model->params, lg.grad, cfg.train);
      step_losses.push_back(lg.loss);
    }
    local.epoch_mean_loss.push_back(PairwiseMean(step_losses));
    if (cfg.train.log_every > 0 && (epoch + 1) % cfg.train.log_every == 0)
      LogInfo("finetune epoch ", epoch + 1, "/", cfg.train.epochs, " mean loss ",
              local.epoch_mean_loss.back());
  }
  local.final_corpus_loss = CorpusLoss(*model, samples);
  if (result != nullptr) *result = local;
  return new_index;
}

// Quantizes and f0-tracks a waveform under the model's settings.
inline TrainSample MakeTrainSample(const Waveform& w, int speaker_index,
                                   const ConverterConfig& cfg) {
  w.Validate();
  AF_CHECK(w.sample_rate_hz == cfg.sample_rate_hz, "train sample: rate ", w.sample_rate_hz,
           " != converter rate ", cfg.sample_rate_hz);
  TrainSample s;
  s.quantized = MuLawEncode(w, cfg.quantization_levels);
  s.f0 = EstimateF0(w, cfg.f0_min_hz, cfg.f0_max_hz, cfg.f0_frame_len_s, cfg.f0_frame_hop_s,
                    cfg.voicing_threshold);
  s.speaker_index = speaker_index;
  return s;
}

inline constexpr uint32_t kCheckpointVersion = 1;

inline void SaveCheckpoint(const ConverterModel& model, std::ostream& f) {
  model.Validate();
  f.write("SKIN", 4);
  WriteU32Le(f, kCheckpointVersion);
  WriteU32Le(f, static_cast<uint32_t>(model.config.quantization_levels));
  WriteU32Le(f, static_cast<uint32_t>(model.config.speaker_dim));
  WriteU32Le(f, static_cast<uint32_t>(model.num_speakers()));
  const uint32_t dims[] = {
      static_cast<uint32_t>(model.config.encoder_layers),
      static_cast<uint32_t>(model.config.encoder_hidden),
      static_cast<uint32_t>(model.config.encoder_kernel),
      static_cast<uint32_t>(model.config.encoder_stride),
      static_cast<uint32_t>(model.config.latent_dim),
      static_cast<uint32_t>(model.config.decoder_layers),
      static_cast<uint32_t>(model.config.decoder_hidden),
      static_cast<uint32_t>(model.config.shift),
      static_cast<uint32_t>(model.config.sample_rate_hz),
  };
  WriteU32Le(f, static_cast<uint32_t>(std::size(dims)));
  for (uint32_t d : dims) WriteU32Le(f, d);
  const double reals[] = {model.config.f0_min_hz, model.config.f0_max_hz,
                          model.config.f0_frame_len_s, model.config.f0_frame_hop_s,
                          model.config.voicing_threshold};
  WriteU32Le(f, static_cast<uint32_t>(std::size(reals)));
  for (double r : reals) WriteF64Le(f, r);
  WriteU64Le(f, model.params.size());
  for (double p : model.params) WriteF64Le(f, p);
  for (const std::string& id : model.speaker_ids) {
    WriteU32Le(f, static_cast<uint32_t>(id.size()));
    f.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  AF_CHECK(f.good(), "short write while serializing checkpoint");
}

inline void SaveCheckpoint(const ConverterModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  AF_CHECK(f.good(), "cannot open checkpoint for writing: ", path);
  SaveCheckpoint(model, f);
  AF_CHECK(f.good(), "short write to checkpoint: ", path);
}

inline ConverterModel LoadCheckpoint(std::istream& f, const std::string& path = "<stream>") {
  char magic[4];
  f.read(magic, 4);
  AF_CHECK(f.gcount() == 4 && std::string(magic, 4) == "SKIN",
           path, ": not a SKIN checkpoint (bad magic)");
  const uint32_t version = ReadU32Le(f, detail::Str(path, ": checkpoint version"));
  AF_CHECK(version == kCheckpointVersion, path, ": unsupported checkpoint version ", version);

  ConverterModel model;
  model.config.quantization_levels = static_cast<int>(ReadU32Le(f, detail::Str(path, ": checkpoint Q")));
  model.config.speaker_dim = static_cast<int>(ReadU32Le(f, detail::Str(path, ": checkpoint d")));
  const uint32_t num_speakers = ReadU32Le(f, detail::Str(path, ": checkpoint speaker count"));
  const uint32_t dim_count = ReadU32Le(f, detail::Str(path, ": checkpoint dim count"));
  AF_CHECK(dim_count == 9, path, ": dimension table has ", dim_count, " entries, expected 9");
  model.config.encoder_layers = static_cast<int>(ReadU32Le(f, detail::Str(path, ": dim encoder_layers")));
  model.config.encoder_hidden = static_cast<int>(ReadU32Le(f, detail::Str(path, ": dim encoder_hidden")));
  model.config.encoder_kernel = static_cast<int>(ReadU32Le(f, detail::Str(path, ": dim encoder_kernel")));
  model.config.encoder_stride = static_cast<int>(ReadU32Le(f, detail::Str(path, ": dim encoder_stride")));
  model.config.latent_dim = static_cast<int>(ReadU32Le(f, detail::Str(path, ": dim latent_dim")));
  model.config.decoder_layers = static_cast<int>(ReadU32Le(f, detail::Str(path, ": dim decoder_layers")));
  model.config.decoder_hidden = static_cast<int>(ReadU32Le(f, detail::Str(path, ": dim decoder_hidden")));
  model.config.shift = static_cast<int>(ReadU32Le(f, detail::Str(path, ": dim shift")));
  model.config.sample_rate_hz = static_cast<int>(ReadU32Le(f, detail::Str(path, ": dim sample_rate_hz")));
  const uint32_t real_count = ReadU32Le(f, detail::Str(path, ": checkpoint real count"));
  AF_CHECK(real_count == 5, path, ": real table has ", real_count, " entries, expected 5");
  model.config.f0_min_hz = ReadF64Le(f, detail::Str(path, ": real f0_min_hz"));
  model.config.f0_max_hz = ReadF64Le(f, detail::Str(path, ": real f0_max_hz"));
  model.config.f0_frame_len_s = ReadF64Le(f, detail::Str(path, ": real f0_frame_len_s"));
  model.config.f0_frame_hop_s = ReadF64Le(f, detail::Str(path, ": real f0_frame_hop_s"));
  model.config.voicing_threshold = ReadF64Le(f, detail::Str(path, ": real voicing_threshold"));
  model.config.Validate();

  const uint64_t param_count = ReadU64Le(f, detail::Str(path, ": checkpoint param count"));
  const detail::ParamLayout lay = detail::MakeLayout(model.config, num_speakers);
  AF_CHECK(param_count == lay.total, path, ": checkpoint declares ", param_count,
           " parameters but dimensions imply ", lay.total);
  model.params.resize(param_count);
  for (uint64_t i = 0; i < param_count; ++i) model.params[i] = ReadF64Le(f, detail::Str(path, ": checkpoint params"));

  model.speaker_ids.resize(num_speakers);
  for (uint32_t i = 0; i < num_speakers; ++i) {
    const uint32_t n = ReadU32Le(f, detail::Str(path, ": speaker id length"));
    AF_CHECK(n > 0 && n < (1u << 20), path, ": speaker ", i, " has implausible id length ", n);
    model.speaker_ids[i].resize(n);
    f.read(model.speaker_ids[i].data(), n);
    AF_CHECK(f.gcount() == static_cast<std::streamsize>(n), path,
             ": truncated reading speaker id ", i);
  }
  model.Validate();
  return model;
}

inline ConverterModel LoadCheckpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  AF_CHECK(f.good(), "cannot open checkpoint: ", path);
  return LoadCheckpoint(f, path);
}

}  // namespace augforge

#endif  // AUGFORGE_SKINCONV_HPP_
