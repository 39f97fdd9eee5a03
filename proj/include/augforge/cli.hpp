// include/augforge/cli.hpp

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

// Subcommand CLI over the library. Every command validates its whole config
// (collecting all failures) before touching the filesystem. Exit codes:
// 0 success, 1 validation or usage error, 2 completed with ledger errors.

#ifndef AUGFORGE_CLI_HPP_
#define AUGFORGE_CLI_HPP_

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "augforge/audio.hpp"
#include "augforge/common.hpp"
#include "augforge/config.hpp"
#include "augforge/corpus.hpp"
#include "augforge/dsp.hpp"
#include "augforge/metrics.hpp"
#include "augforge/rng.hpp"
#include "augforge/skinconv.hpp"
#include "augforge/specaugment.hpp"

namespace augforge::cli {

namespace detail {

namespace fs = std::filesystem;

using augforge::detail::Str;

inline const std::map<std::string, std::set<std::string>>& KnownKeys() {
  static const std::map<std::string, std::set<std::string>> schema = {
      {"", {"seed", "workers"}},
      {"converter",
       {"quantization_levels", "encoder_layers", "encoder_hidden", "encoder_kernel",
        "encoder_stride", "latent_dim", "decoder_layers", "decoder_hidden", "speaker_dim",
        "shift", "sample_rate_hz", "f0_min_hz", "f0_max_hz", "f0_frame_len_s", "f0_frame_hop_s",
        "voicing_threshold"}},
      {"train",
       {"manifest", "out_dir", "epochs", "learning_rate", "grad_clip_norm", "crop_samples",
        "input_noise_prob", "input_noise_radius", "log_every", "leakage"}},
      {"augment",
       {"manifest", "checkpoint", "out_dir", "fraction", "num_skins", "voices",
        "include_original"}},
      {"specaugment",
       {"warp_w", "freq_mask_f", "n_freq_masks", "time_mask_t", "n_time_masks",
        "time_mask_ratio_cap", "mask_fill", "mask_value", "p", "batch_size", "out_dir"}},
      {"normalize", {"manifest", "checkpoint", "out_dir", "voices", "allow_fewer_voices"}},
      {"score", {"lowercase", "smoothing", "max_n"}},
  };
  return schema;
}

// Unknown keys are fatal; the message suggests the nearest known key in the
// same section when one is plausibly close.
inline void CheckConfigKeys(const Config& cfg, std::vector<std::string>* errors) {
  const auto& schema = KnownKeys();
  for (const Config::Entry& e : cfg.entries()) {
    const auto sit = schema.find(e.section);
    if (sit == schema.end()) {
      errors->push_back(Str(cfg.origin(), ": unknown config section '[", e.section, "]'"));
      continue;
    }
    if (sit->second.count(e.key) > 0) continue;
    std::string best;
    size_t best_dist = 4;  // suggestions beyond 3 edits are noise
    for (const std::string& known : sit->second) {
      const size_t d = EditDistance(e.key, known);
      if (d < best_dist) {
        best_dist = d;
        best = known;
      }
    }
    std::string msg = Str(cfg.origin(), ": unknown key '",
                                  Config::Qualify(e.section, e.key), "'");
    if (!best.empty()) msg += Str(" (did you mean '", best, "'?)");
    errors->push_back(msg);
  }
}

// Wraps a Config getter so one bad value becomes one collected error instead
// of aborting the whole validation pass.
template <typename Fn>
void Collect(std::vector<std::string>* errors, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    errors->push_back(e.what());
  }
}

inline int FailWith(const std::vector<std::string>& errors, std::ostream& err) {
  err << "validation failed with " << errors.size()
      << (errors.size() == 1 ? " error:" : " errors:") << "\n";
  for (const std::string& e : errors) err << "  - " << e << "\n";
  return 1;
}

inline ConverterConfig ConverterFromConfig(const Config& cfg) {
  ConverterConfig c;
  c.quantization_levels =
      static_cast<int>(cfg.GetInt("converter", "quantization_levels", c.quantization_levels));
  c.encoder_layers = static_cast<int>(cfg.GetInt("converter", "encoder_layers", c.encoder_layers));
  c.encoder_hidden = static_cast<int>(cfg.GetInt("converter", "encoder_hidden", c.encoder_hidden));
  c.encoder_kernel = static_cast<int>(cfg.GetInt("converter", "encoder_kernel", c.encoder_kernel));
  c.encoder_stride = static_cast<int>(cfg.GetInt("converter", "encoder_stride", c.encoder_stride));
  c.latent_dim = static_cast<int>(cfg.GetInt("converter", "latent_dim", c.latent_dim));
  c.decoder_layers = static_cast<int>(cfg.GetInt("converter", "decoder_layers", c.decoder_layers));
  c.decoder_hidden = static_cast<int>(cfg.GetInt("converter", "decoder_hidden", c.decoder_hidden));
  c.speaker_dim = static_cast<int>(cfg.GetInt("converter", "speaker_dim", c.speaker_dim));
  c.shift = static_cast<int>(cfg.GetInt("converter", "shift", c.shift));
  c.sample_rate_hz = static_cast<int>(cfg.GetInt("converter", "sample_rate_hz", c.sample_rate_hz));
  c.f0_min_hz = cfg.GetReal("converter", "f0_min_hz", c.f0_min_hz);
  c.f0_max_hz = cfg.GetReal("converter", "f0_max_hz", c.f0_max_hz);
  c.f0_frame_len_s = cfg.GetReal("converter", "f0_frame_len_s", c.f0_frame_len_s);
  c.f0_frame_hop_s = cfg.GetReal("converter", "f0_frame_hop_s", c.f0_frame_hop_s);
  c.voicing_threshold = cfg.GetReal("converter", "voicing_threshold", c.voicing_threshold);
  return c;
}

inline SpecAugmentPolicy PolicyFromConfig(const Config& cfg, std::vector<std::string>* errors) {
  SpecAugmentPolicy p;
  p.warp_w = static_cast<int>(cfg.GetInt("specaugment", "warp_w", p.warp_w));
  p.freq_mask_f = static_cast<int>(cfg.GetInt("specaugment", "freq_mask_f", p.freq_mask_f));
  p.n_freq_masks = static_cast<int>(cfg.GetInt("specaugment", "n_freq_masks", p.n_freq_masks));
  p.time_mask_t = static_cast<int>(cfg.GetInt("specaugment", "time_mask_t", p.time_mask_t));
  p.n_time_masks = static_cast<int>(cfg.GetInt("specaugment", "n_time_masks", p.n_time_masks));
  p.time_mask_ratio_cap =
      cfg.GetReal("specaugment", "time_mask_ratio_cap", p.time_mask_ratio_cap);
  p.mask_value = cfg.GetReal("specaugment", "mask_value", p.mask_value);
  const std::string fill = cfg.GetString("specaugment", "mask_fill", "mean");
  if (fill == "mean") {
    p.fill_with_mean = true;
  } else if (fill == "value") {
    p.fill_with_mean = false;
  } else {
    errors->push_back(Str(cfg.origin(),
                                  ": specaugment.mask_fill must be 'mean' or 'value', got '",
                                  fill, "'"));
  }
  return p;
}

inline void CheckAudioPaths(const Manifest& records, const std::string& what,
                            std::vector<std::string>* errors) {
  for (const UtteranceRecord& r : records)
    if (!fs::exists(r.audio_path))
      errors->push_back(Str(what, ": audio file missing for '", r.id, "': ",
                                    r.audio_path));
}

inline std::vector<std::string> DefaultVoices(const ConverterModel& model, size_t k) {
  std::vector<std::string> ids = model.speaker_ids;
  std::sort(ids.begin(), ids.end());
  if (ids.size() > k) ids.resize(k);
  return ids;
}

inline std::string Format2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string Format1x(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1fx", v);
  return buf;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  int64_t seed = -1;     // -1 = not given on the command line
  int workers = 0;       // 0 = not given
};

inline uint64_t ResolveSeed(const Config& cfg, const CommonFlags& flags) {
  if (flags.seed >= 0) return static_cast<uint64_t>(flags.seed);
  return cfg.GetU64("", "seed", 0);
}

inline int ResolveWorkers(const Config& cfg, const CommonFlags& flags) {
  if (flags.workers > 0) return flags.workers;
  const int64_t from_cfg = cfg.GetInt("", "workers", 0);
  if (from_cfg > 0) return static_cast<int>(from_cfg);
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// ---------------------------------------------------------------------------
// train-skin

inline int CmdTrainSkin(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  Config cfg = Config::ParseFile(flags.config_path);
  std::vector<std::string> errors;
  CheckConfigKeys(cfg, &errors);

  Manifest manifest;
  std::string manifest_path;
  Collect(&errors, [&] {
    manifest_path = cfg.RequireString("train", "manifest");
    manifest = ReadManifest(manifest_path);
    AF_CHECK(!manifest.empty(), manifest_path, ": empty training manifest");
  });
  if (!manifest.empty()) CheckAudioPaths(manifest, manifest_path, &errors);

  Collect(&errors, [&] {
    const std::string leakage = cfg.GetString("train", "leakage", "");
    AF_CHECK(leakage == "filtered" || leakage == "waived",
             cfg.origin(), ": train.leakage must be 'filtered' (leakage filters already applied) ",
             "or 'waived' (explicitly skipped); got '", leakage, "'");
  });

  ConverterConfig conv;
  Collect(&errors, [&] {
    conv = ConverterFromConfig(cfg);
    conv.Validate();
  });

  TrainConfig train_cfg;
  Collect(&errors, [&] {
    train_cfg.epochs = static_cast<int>(cfg.GetInt("train", "epochs", train_cfg.epochs));
    train_cfg.learning_rate = cfg.GetReal("train", "learning_rate", train_cfg.learning_rate);
    train_cfg.grad_clip_norm = cfg.GetReal("train", "grad_clip_norm", train_cfg.grad_clip_norm);
    train_cfg.crop_samples =
        static_cast<int>(cfg.GetInt("train", "crop_samples", train_cfg.crop_samples));
    train_cfg.input_noise_prob =
        cfg.GetReal("train", "input_noise_prob", train_cfg.input_noise_prob);
    train_cfg.input_noise_radius =
        static_cast<int>(cfg.GetInt("train", "input_noise_radius", train_cfg.input_noise_radius));
    train_cfg.log_every = static_cast<int>(cfg.GetInt("train", "log_every", train_cfg.log_every));
    train_cfg.Validate();
  });

  std::string out_dir = flags.out_dir;
  Collect(&errors, [&] {
    if (out_dir.empty()) out_dir = cfg.RequireString("train", "out_dir");
  });

  uint64_t seed = 0;
  Collect(&errors, [&] { seed = ResolveSeed(cfg, flags); });
  if (!errors.empty()) return FailWith(errors, err);

  train_cfg.seed = seed;
  fs::create_directories(out_dir);

  std::vector<std::string> speakers;
  for (const UtteranceRecord& r : manifest) speakers.push_back(r.speaker_id);
  std::sort(speakers.begin(), speakers.end());
  speakers.erase(std::unique(speakers.begin(), speakers.end()), speakers.end());

  ConverterModel model = InitializeConverter(conv, speakers, seed);
  std::vector<TrainSample> corpus;
  corpus.reserve(manifest.size());
  for (const UtteranceRecord& r : manifest) {
    const Waveform w = ReadWav(r.audio_path);
    const auto sp = std::find(speakers.begin(), speakers.end(), r.speaker_id);
    corpus.push_back(MakeTrainSample(w, static_cast<int>(sp - speakers.begin()), conv));
  }

  const TrainResult result = Train(&model, corpus, train_cfg);

  const fs::path ckpt = fs::path(out_dir) / "skin.ckpt";
  SaveCheckpoint(model, ckpt.string());
  const fs::path log_path = fs::path(out_dir) / "train_log.tsv";
  {
    std::ofstream log(log_path, std::ios::binary);
    AF_CHECK(log.good(), "cannot open training log for writing: ", log_path.string());
    log << "# initial_corpus_loss\t" << Str(result.initial_corpus_loss) << "\n";
    log << "# final_corpus_loss\t" << Str(result.final_corpus_loss) << "\n";
    log << "epoch\tmean_loss\n";
    for (size_t i = 0; i < result.epoch_mean_loss.size(); ++i)
      log << i + 1 << "\t" << Str(result.epoch_mean_loss[i]) << "\n";
    AF_CHECK(log.good(), "short write to training log: ", log_path.string());
  }

  out << "trained " << speakers.size() << " speakers, " << model.params.size() << " parameters, "
      << train_cfg.epochs << " epochs\n";
  out << "initial corpus loss " << Str(result.initial_corpus_loss) << ", final "
      << Str(result.final_corpus_loss) << "\n";
  out << "checkpoint: " << ckpt.string() << "\n";
  out << "training log: " << log_path.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// augment

inline int CmdAugment(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  Config cfg = Config::ParseFile(flags.config_path);
  std::vector<std::string> errors;
  CheckConfigKeys(cfg, &errors);

  std::string ckpt_path, manifest_path;
  Manifest manifest;
  Collect(&errors, [&] {
    ckpt_path = cfg.RequireString("augment", "checkpoint");
    AF_CHECK(fs::exists(ckpt_path), ckpt_path, ": checkpoint does not exist");
  });
  Collect(&errors, [&] {
    manifest_path = cfg.RequireString("augment", "manifest");
    manifest = ReadManifest(manifest_path);
    AF_CHECK(!manifest.empty(), manifest_path, ": empty manifest");
  });
  if (!manifest.empty()) CheckAudioPaths(manifest, manifest_path, &errors);

  ConverterModel model;
  Collect(&errors, [&] {
    if (!ckpt_path.empty() && fs::exists(ckpt_path)) model = LoadCheckpoint(ckpt_path);
  });

  AugmentPolicy policy;
  Collect(&errors, [&] {
    policy.fraction = cfg.GetReal("augment", "fraction", 1.0);
    policy.num_skins = static_cast<int>(cfg.GetInt("augment", "num_skins", 1));
    policy.voice_ids = cfg.GetList("augment", "voices");
    if (policy.voice_ids.empty() && !model.speaker_ids.empty())
      policy.voice_ids = DefaultVoices(model, static_cast<size_t>(std::max(policy.num_skins, 0)));
    policy.sampling_seed = ResolveSeed(cfg, flags);
    policy.Validate();
    for (const std::string& v : policy.voice_ids) model.speaker_index(v);
  });

  std::string out_dir = flags.out_dir;
  Collect(&errors, [&] {
    if (out_dir.empty()) out_dir = cfg.RequireString("augment", "out_dir");
  });
  const bool include_original = cfg.GetBool("augment", "include_original", true);
  if (!errors.empty()) return FailWith(errors, err);

  const std::vector<PlanEntry> plan = PlanAugmentation(manifest, policy);
  const double ratio =
      static_cast<double>(plan.size()) / static_cast<double>(manifest.size());

  ExecuteOptions opt;
  opt.workers = ResolveWorkers(cfg, flags);
  const ExecuteResult result = ExecutePlan(plan, model, out_dir, opt);

  Manifest final_manifest =
      include_original ? Merge({manifest, result.records}) : result.records;
  const fs::path manifest_out = fs::path(out_dir) / "augmented.tsv";
  WriteManifest(final_manifest, manifest_out.string());

  out << "planned " << plan.size() << " conversions (" << plan.size() / policy.voice_ids.size()
      << " sources x " << policy.voice_ids.size() << " voices)\n";
  out << "augmentation ratio: " << Format1x(ratio) << "\n";
  out << "converted " << result.converted << ", cached " << result.skipped << ", failed "
      << result.errors.size() << "\n";
  out << "manifest: " << manifest_out.string() << " (" << final_manifest.size() << " records)\n";

  if (!result.errors.empty()) {
    const fs::path ledger = fs::path(out_dir) / "errors.tsv";
    WriteErrorLedger(result.errors, ledger.string());
    out << "error ledger: " << ledger.string() << "\n";
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// specaugment

inline int CmdSpecAugment(const CommonFlags& flags, const std::vector<std::string>& inputs,
                          std::ostream& out, std::ostream& err) {
  Config cfg = Config::ParseFile(flags.config_path);
  std::vector<std::string> errors;
  CheckConfigKeys(cfg, &errors);

  BatchAugmentor aug;
  Collect(&errors, [&] {
    aug.policy = PolicyFromConfig(cfg, &errors);
    aug.apply_prob = cfg.GetReal("specaugment", "p", 1.0);
    aug.rng_seed = Rng::Derive(ResolveSeed(cfg, flags), seed_stream::kSpecAugment);
    aug.Validate();
  });
  int64_t batch_size = 0;
  Collect(&errors, [&] {
    batch_size = cfg.GetInt("specaugment", "batch_size", 1);
    AF_CHECK(batch_size >= 1, cfg.origin(), ": specaugment.batch_size must be >= 1, got ",
             batch_size);
  });
  std::string out_dir = flags.out_dir;
  Collect(&errors, [&] {
    if (out_dir.empty()) out_dir = cfg.RequireString("specaugment", "out_dir");
  });

  // Inputs may be .melf files or directories of them; processing order is
  // the sorted path list so batching is reproducible.
  std::vector<fs::path> files;
  for (const std::string& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& entry : fs::directory_iterator(in))
        if (entry.is_regular_file() && entry.path().extension() == ".melf")
          files.push_back(entry.path());
    } else if (fs::exists(in)) {
      files.push_back(in);
    } else {
      errors.push_back(Str(in, ": input does not exist"));
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) errors.push_back("no .melf inputs found");
  {
    std::set<std::string> names;
    for (const fs::path& f : files)
      if (!names.insert(f.filename().string()).second)
        errors.push_back(Str("duplicate input basename '", f.filename().string(),
                                     "'; outputs would collide"));
  }
  if (!errors.empty()) return FailWith(errors, err);

  std::vector<MelSpectrogram> specs;
  specs.reserve(files.size());
  for (const fs::path& f : files) specs.push_back(ReadMelf(f.string()));

  fs::create_directories(out_dir);
  size_t augmented_batches = 0, total_batches = 0;
  for (size_t start = 0; start < specs.size(); start += static_cast<size_t>(batch_size)) {
    const size_t end = std::min(specs.size(), start + static_cast<size_t>(batch_size));
    std::vector<MelSpectrogram> batch(specs.begin() + start, specs.begin() + end);
    bool applied = false;
    const std::vector<MelSpectrogram> result = AugmentBatch(batch, aug, total_batches, &applied);
    ++total_batches;
    if (applied) ++augmented_batches;
    for (size_t i = 0; i < result.size(); ++i)
      WriteMelf(result[i], (fs::path(out_dir) / files[start + i].filename()).string());
  }

  out << "wrote " << specs.size() << " feature files in " << total_batches << " batches\n";
  if (aug.apply_prob < 1.0) {
    const double fraction =
        static_cast<double>(augmented_batches) / static_cast<double>(total_batches);
    out << "augmented " << augmented_batches << "/" << total_batches << " batches ("
        << Str(fraction) << ")\n";
    LogInfo("specaugment realized batch fraction ", fraction, " at p=", aug.apply_prob);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// normalize

inline constexpr int kNormalizationProtocolVoices = 8;

inline int CmdNormalize(const CommonFlags& flags, std::ostream& out, std::ostream& err) {
  Config cfg = Config::ParseFile(flags.config_path);
  std::vector<std::string> errors;
  CheckConfigKeys(cfg, &errors);

  std::string ckpt_path, manifest_path;
  Manifest test;
  ConverterModel model;
  Collect(&errors, [&] {
    ckpt_path = cfg.RequireString("normalize", "checkpoint");
    AF_CHECK(fs::exists(ckpt_path), ckpt_path, ": checkpoint does not exist");
    model = LoadCheckpoint(ckpt_path);
  });
  Collect(&errors, [&] {
    manifest_path = cfg.RequireString("normalize", "manifest");
    test = ReadManifest(manifest_path);
    AF_CHECK(!test.empty(), manifest_path, ": empty test manifest");
  });
  if (!test.empty()) CheckAudioPaths(test, manifest_path, &errors);

  std::vector<std::string> voices;
  Collect(&errors, [&] {
    voices = cfg.GetList("normalize", "voices");
    if (voices.empty() && !model.speaker_ids.empty())
      voices = DefaultVoices(model, kNormalizationProtocolVoices);
    AF_CHECK(!voices.empty(), "normalize: no voices configured and model has none");
    const bool allow_fewer = cfg.GetBool("normalize", "allow_fewer_voices", false);
    AF_CHECK(static_cast<int>(voices.size()) >= kNormalizationProtocolVoices || allow_fewer,
             "normalize: protocol calls for ", kNormalizationProtocolVoices, " voices, got ",
             voices.size(), "; set normalize.allow_fewer_voices = true to override");
    for (const std::string& v : voices) model.speaker_index(v);
  });

  std::string out_dir = flags.out_dir;
  Collect(&errors, [&] {
    if (out_dir.empty()) out_dir = cfg.RequireString("normalize", "out_dir");
  });
  if (!errors.empty()) return FailWith(errors, err);

  ExecuteOptions opt;
  opt.workers = ResolveWorkers(cfg, flags);
  const NormalizeResult result = NormalizeTestset(test, model, voices, out_dir, opt);

  for (const NormalizedTestset& ts : result.testsets) {
    const fs::path path =
        fs::path(out_dir) / (augforge::detail::SanitizedBasename(ts.voice) + ".tsv");
    WriteManifest(ts.records, path.string());
    out << "voice " << ts.voice << ": " << ts.records.size() << " records -> " << path.string()
        << "\n";
  }

  // Score template: external decoding fills the score column, then
  // `augforge report --scores <file>` assembles mean/std/within-one-std.
  const fs::path scores_path = fs::path(out_dir) / "scores.tsv";
  {
    std::ofstream f(scores_path, std::ios::binary);
    AF_CHECK(f.good(), "cannot write score template: ", scores_path.string());
    f << "# Fill in one score per line, then run: augforge report --scores "
      << scores_path.string() << "\n";
    f << "# voice\tscore\n";
    f << "unmodified\t\n";
    for (const std::string& v : voices) f << v << "\t\n";
    AF_CHECK(f.good(), "short write to score template: ", scores_path.string());
  }
  out << "score template: " << scores_path.string() << "\n";

  if (!result.errors.empty()) {
    const fs::path ledger = fs::path(out_dir) / "errors.tsv";
    WriteErrorLedger(result.errors, ledger.string());
    out << "error ledger: " << ledger.string() << " (" << result.errors.size() << " failures)\n";
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// score

inline std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  AF_CHECK(f.good(), "cannot open: ", path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline int CmdScore(const CommonFlags& flags, const std::string& metric,
                    const std::string& hyp_path, const std::string& ref_path,
                    const std::string& report_path, std::ostream& out, std::ostream& err) {
  Config cfg = flags.config_path.empty() ? Config::ParseString("", "<defaults>")
                                         : Config::ParseFile(flags.config_path);
  std::vector<std::string> errors;
  CheckConfigKeys(cfg, &errors);
  if (!errors.empty()) return FailWith(errors, err);

  const bool lowercase = cfg.GetBool("score", "lowercase", false);
  const std::vector<std::string> hyp_lines = ReadLines(hyp_path);
  const std::vector<std::string> ref_lines = ReadLines(ref_path);
  AF_CHECK(hyp_lines.size() == ref_lines.size(), "line count mismatch: ", hyp_lines.size(),
           " vs ", ref_lines.size(), " (", hyp_path, " vs ", ref_path, ")");
  AF_CHECK(!hyp_lines.empty(), "empty input: ", hyp_path);

  std::vector<ScoredPair> pairs(hyp_lines.size());
  for (size_t i = 0; i < hyp_lines.size(); ++i) {
    pairs[i].hypothesis = Tokenize(hyp_lines[i], lowercase);
    pairs[i].reference = Tokenize(ref_lines[i], lowercase);
  }

  double score = 0.0;
  if (metric == "bleu") {
    BleuOptions opt;
    opt.max_n = static_cast<int>(cfg.GetInt("score", "max_n", opt.max_n));
    opt.smoothing = cfg.GetBool("score", "smoothing", opt.smoothing);
    score = Bleu(pairs, opt);
  } else if (metric == "wer") {
    score = Wer(pairs);
  } else {
    AF_FAIL("unknown metric '", metric, "' (expected bleu or wer)");
  }

  out << Format2(score) << "\n";
  if (!report_path.empty()) {
    std::ofstream f(report_path, std::ios::binary);
    AF_CHECK(f.good(), "cannot write report: ", report_path);
    f << "metric=" << metric << "\n";
    f << "score=" << Str(score) << "\n";
    f << "pairs=" << pairs.size() << "\n";
    AF_CHECK(f.good(), "short write to report: ", report_path);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// merge / filter

inline int CmdMerge(const std::vector<std::string>& inputs, const std::string& out_path,
                    std::ostream& out) {
  std::vector<Manifest> manifests;
  manifests.reserve(inputs.size());
  for (const std::string& path : inputs) manifests.push_back(ReadManifest(path));
  const Manifest merged = Merge(manifests);
  WriteManifest(merged, out_path);
  out << "merged " << inputs.size() << " manifests into " << out_path << " (" << merged.size()
      << " records)\n";
  return 0;
}

inline int CmdFilter(const std::string& train_path, const std::string& test_path,
                     const std::string& mode, const std::string& out_path, std::ostream& out) {
  LeakageMode m;
  if (mode == "by_speaker") {
    m = LeakageMode::kBySpeaker;
  } else if (mode == "by_transcript") {
    m = LeakageMode::kByTranscript;
  } else {
    AF_FAIL("unknown filter mode '", mode, "' (expected by_speaker or by_transcript)");
  }
  const Manifest train = ReadManifest(train_path);
  const Manifest test = ReadManifest(test_path);
  const Manifest kept = FilterLeakage(train, test, m);
  WriteManifest(kept, out_path);
  out << "kept " << kept.size() << " of " << train.size() << " records (dropped "
      << train.size() - kept.size() << ") -> " << out_path << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

inline int CmdReport(const std::string& scores_path, const std::string& out_path,
                     std::ostream& out) {
  std::ifstream f(scores_path, std::ios::binary);
  AF_CHECK(f.good(), "cannot open scores file: ", scores_path);
  std::vector<double> per_voice;
  std::vector<std::string> voice_names;
  double unmodified = 0.0;
  bool have_unmodified = false;
  std::string line;
  size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = augforge::detail::SplitTabs(line);
    AF_CHECK(fields.size() == 2, scores_path, ":", line_no,
             ": expected 'voice<TAB>score', got '", line, "'");
    const std::string& name = fields[0];
    char* end = nullptr;
    const double value = std::strtod(fields[1].c_str(), &end);
    AF_CHECK(end != fields[1].c_str() && *end == '\0', scores_path, ":", line_no,
             ": score for '", name, "' is missing or not a number ('", fields[1], "')");
    if (name == "unmodified") {
      AF_CHECK(!have_unmodified, scores_path, ":", line_no, ": duplicate 'unmodified' row");
      unmodified = value;
      have_unmodified = true;
    } else {
      voice_names.push_back(name);
      per_voice.push_back(value);
    }
  }
  AF_CHECK(have_unmodified, scores_path, ": no 'unmodified' row");
  const NormalizationReport rep = MakeNormalizationReport(per_voice, unmodified);

  out << "voices " << per_voice.size() << ": mean " << Format2(rep.mean) << ", population std "
      << Format2(rep.std_dev) << ", unmodified " << Format2(rep.unmodified_score)
      << " (within one std: " << (rep.within_one_std ? "yes" : "no") << ")\n";

  if (!out_path.empty()) {
    std::ofstream rf(out_path, std::ios::binary);
    AF_CHECK(rf.good(), "cannot write report: ", out_path);
    rf << "mean=" << Str(rep.mean) << "\n";
    rf << "std=" << Str(rep.std_dev) << "\n";
    rf << "unmodified=" << Str(rep.unmodified_score) << "\n";
    rf << "within_one_std=" << (rep.within_one_std ? "true" : "false") << "\n";
    for (size_t i = 0; i < per_voice.size(); ++i)
      rf << "voice." << voice_names[i] << "=" << Str(per_voice[i]) << "\n";
    AF_CHECK(rf.good(), "short write to report: ", out_path);
  }
  return 0;
}

}  // namespace detail

// Entry point shared by the binary and the tests. Returns the process exit
// code; all output goes through the given streams.
inline int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"augforge: speech data augmentation by voice skinning"};
  app.require_subcommand(1);

  detail::CommonFlags flags;

  auto add_common = [&flags](CLI::App* sub, bool with_workers) {
    sub->add_option("--config", flags.config_path, "Pipeline config file")->required();
    sub->add_option("--out", flags.out_dir, "Output directory (overrides the config)");
    sub->add_option("--seed", flags.seed, "Global seed (overrides the config)");
    if (with_workers) sub->add_option("--workers", flags.workers, "Worker pool size");
  };

  CLI::App* train = app.add_subcommand("train-skin", "Train the voice converter on a manifest");
  add_common(train, false);

  CLI::App* augment =
      app.add_subcommand("augment", "Skin a sampled fraction of a corpus into K voices");
  add_common(augment, true);

  CLI::App* spec =
      app.add_subcommand("specaugment", "Apply SpecAugment(-p) to MELF feature files");
  std::vector<std::string> spec_inputs;
  add_common(spec, false);
  spec->add_option("inputs", spec_inputs, ".melf files or directories of them")->required();

  CLI::App* normalize =
      app.add_subcommand("normalize", "Skin a test set into single-voice copies");
  add_common(normalize, true);

  CLI::App* score = app.add_subcommand("score", "Score hypothesis against reference text");
  std::string metric, hyp_path, ref_path, report_path;
  score->add_option("--metric", metric, "bleu or wer")->required();
  score->add_option("hyp", hyp_path, "Hypothesis file, one segment per line")->required();
  score->add_option("ref", ref_path, "Reference file, one segment per line")->required();
  score->add_option("--config", flags.config_path, "Pipeline config file (for [score] options)");
  score->add_option("--report", report_path, "Write a key=value report here");

  CLI::App* merge = app.add_subcommand("merge", "Merge manifests, rejecting id collisions");
  std::vector<std::string> merge_inputs;
  std::string merge_out;
  merge->add_option("inputs", merge_inputs, "Input manifests")->required();
  merge->add_option("--out", merge_out, "Output manifest path")->required();

  CLI::App* filter = app.add_subcommand("filter", "Drop train records that leak test identity");
  std::string filter_train, filter_test, filter_mode, filter_out;
  filter->add_option("--train", filter_train, "Training manifest")->required();
  filter->add_option("--test", filter_test, "Test manifest")->required();
  filter->add_option("--mode", filter_mode, "by_speaker or by_transcript")->required();
  filter->add_option("--out", filter_out, "Output manifest path")->required();

  CLI::App* report = app.add_subcommand("report", "Assemble the voice-normalization report");
  std::string report_scores, report_out;
  report->add_option("--scores", report_scores, "TSV of voice<TAB>score rows plus 'unmodified'")
      ->required();
  report->add_option("--out", report_out, "Write a key=value report here");

  std::vector<std::string> argv(args.rbegin(), args.rend());  // CLI11 takes a reversed vector
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return detail::CmdTrainSkin(flags, out, err);
    if (augment->parsed()) return detail::CmdAugment(flags, out, err);
    if (spec->parsed()) return detail::CmdSpecAugment(flags, spec_inputs, out, err);
    if (normalize->parsed()) return detail::CmdNormalize(flags, out, err);
    if (score->parsed())
      return detail::CmdScore(flags, metric, hyp_path, ref_path, report_path, out, err);
    if (merge->parsed()) return detail::CmdMerge(merge_inputs, merge_out, out);
    if (filter->parsed())
      return detail::CmdFilter(filter_train, filter_test, filter_mode, filter_out, out);
    if (report->parsed()) return detail::CmdReport(report_scores, report_out, out);
  } catch (const std::exception& e) {
    err << "augforge: error: " << e.what() << "\n";
    return 1;
  }
  err << "augforge: no subcommand selected\n";
  return 1;
}

}  // namespace augforge::cli

#endif  // AUGFORGE_CLI_HPP_
