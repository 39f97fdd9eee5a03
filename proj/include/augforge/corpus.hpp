// include/augforge/corpus.hpp

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

// Corpus manifests and the skinning policy engine: sample a fraction of the
// corpus, convert it into K voices, merge with other corpora (e.g. machine
// translated rows), filter train/test leakage, and build single-voice test
// sets.

#ifndef AUGFORGE_CORPUS_HPP_
#define AUGFORGE_CORPUS_HPP_

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "augforge/audio.hpp"
#include "augforge/common.hpp"
#include "augforge/rng.hpp"
#include "augforge/skinconv.hpp"

namespace augforge {

enum class Origin { kOriginal, kSkinned, kMachineTranslated };

inline const char* OriginToString(Origin o) {
  switch (o) {
    case Origin::kOriginal: return "original";
    case Origin::kSkinned: return "skinned";
    case Origin::kMachineTranslated: return "machine_translated";
  }
  AF_FAIL("bad Origin value ", static_cast<int>(o));
}

inline Origin OriginFromString(const std::string& s) {
  if (s == "original") return Origin::kOriginal;
  if (s == "skinned") return Origin::kSkinned;
  if (s == "machine_translated") return Origin::kMachineTranslated;
  AF_FAIL("unknown origin '", s, "' (expected original, skinned, or machine_translated)");
}

struct UtteranceRecord {
  std::string id;
  std::string audio_path;
  std::string speaker_id;
  std::string transcript;    // empty = absent
  std::string translation;   // empty = absent
  Origin origin = Origin::kOriginal;
  std::string source_id;     // skinned records: the original utterance
  std::string skin_voice;    // skinned records: the target voice

  void Validate() const {
    AF_CHECK(!id.empty(), "utterance record with empty id");
    AF_CHECK(id[0] != '#', "utterance id '", id, "' may not start with '#'");
    if (origin == Origin::kSkinned) {
      AF_CHECK(!source_id.empty() && !skin_voice.empty(),
               "skinned record '", id, "' must carry source_id and skin_voice");
    } else if (origin == Origin::kOriginal) {
      AF_CHECK(source_id.empty() && skin_voice.empty(),
               "original record '", id, "' must not carry source_id or skin_voice");
    }
  }
};

using Manifest = std::vector<UtteranceRecord>;

inline void ValidateManifest(const Manifest& records, const std::string& context) {
  std::unordered_set<std::string> seen;
  for (const UtteranceRecord& r : records) {
    r.Validate();
    AF_CHECK(seen.insert(r.id).second, context, ": duplicate utterance id '", r.id, "'");
  }
}

namespace detail {

inline void CheckTsvField(const std::string& field, const std::string& id) {
  for (char c : field)
    AF_CHECK(c != '\t' && c != '\n' && c != '\r',
             "record '", id, "': field contains a tab or newline, not representable in TSV");
}

inline std::vector<std::string> SplitTabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  for (;;) {
    const size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

// Tab-separated, one record per line, '#' comment lines ignored. Optional
// fields are written as empty strings.
inline constexpr const char* kManifestHeader =
    "# id\taudio_path\tspeaker_id\ttranscript\ttranslation\torigin\tsource_id\tskin_voice";

inline void WriteManifest(const Manifest& records, std::ostream& os) {
  os << kManifestHeader << "\n";
  for (const UtteranceRecord& r : records) {
    r.Validate();
    for (const std::string* f :
         {&r.id, &r.audio_path, &r.speaker_id, &r.transcript, &r.translation, &r.source_id,
          &r.skin_voice})
      detail::CheckTsvField(*f, r.id);
    os << r.id << '\t' << r.audio_path << '\t' << r.speaker_id << '\t' << r.transcript << '\t'
       << r.translation << '\t' << OriginToString(r.origin) << '\t' << r.source_id << '\t'
       << r.skin_voice << "\n";
  }
}

inline void WriteManifest(const Manifest& records, const std::string& path) {
  ValidateManifest(records, path);
  std::ofstream f(path, std::ios::binary);
  AF_CHECK(f.good(), "cannot open manifest for writing: ", path);
  WriteManifest(records, f);
  AF_CHECK(f.good(), "short write to manifest: ", path);
}

inline Manifest ReadManifest(std::istream& is, const std::string& path = "<stream>") {
  Manifest records;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = detail::SplitTabs(line);
    AF_CHECK(f.size() == 8, path, ":", line_no, ": expected 8 tab-separated fields, got ",
             f.size());
    UtteranceRecord r;
    r.id = f[0];
    r.audio_path = f[1];
    r.speaker_id = f[2];
    r.transcript = f[3];
    r.translation = f[4];
    try {
      r.origin = OriginFromString(f[5]);
    } catch (const Error& e) {
      AF_FAIL(path, ":", line_no, ": ", e.what());
    }
    r.source_id = f[6];
    r.skin_voice = f[7];
    try {
      r.Validate();
    } catch (const Error& e) {
      AF_FAIL(path, ":", line_no, ": ", e.what());
    }
    records.push_back(std::move(r));
  }
  ValidateManifest(records, path);
  return records;
}

inline Manifest ReadManifest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  AF_CHECK(f.good(), "cannot open manifest: ", path);
  return ReadManifest(f, path);
}

struct AugmentPolicy {
  double fraction = 1.0;               // f in (0, 1]
  int num_skins = 1;                   // K
  std::vector<std::string> voice_ids;  // exactly K, unique
  uint64_t sampling_seed = 0;

  void Validate() const {
    AF_CHECK(fraction > 0.0 && fraction <= 1.0, "augment policy: fraction must be in (0, 1], got ",
             fraction);
    AF_CHECK(num_skins >= 1, "augment policy: num_skins must be >= 1, got ", num_skins);
    AF_CHECK(voice_ids.size() == static_cast<size_t>(num_skins), "augment policy: have ",
             voice_ids.size(), " voice ids for num_skins=", num_skins);
    for (size_t i = 0; i < voice_ids.size(); ++i) {
      AF_CHECK(!voice_ids[i].empty(), "augment policy: empty voice id at position ", i);
      for (size_t j = i + 1; j < voice_ids.size(); ++j)
        AF_CHECK(voice_ids[i] != voice_ids[j], "augment policy: duplicate voice id '",
                 voice_ids[i], "'");
    }
  }
};

struct PlanEntry {
  UtteranceRecord source;
  std::string voice;
};

// round(f*N) utterances sampled without replacement, each paired with all K
// voices, so |plan| = round(f*N)*K. Sampling operates on ids in sorted order
// and is keyed only by the policy seed, so the plan is independent of
// manifest record order.
inline std::vector<PlanEntry> PlanAugmentation(const Manifest& manifest,
                                               const AugmentPolicy& policy) {
  policy.Validate();
  AF_CHECK(!manifest.empty(), "plan: empty manifest");
  ValidateManifest(manifest, "plan input");
  const size_t n = manifest.size();
  const size_t take =
      static_cast<size_t>(std::llround(policy.fraction * static_cast<double>(n)));
  AF_CHECK(take >= 1, "plan: fraction ", policy.fraction, " of ", n,
           " utterances rounds to zero (vacuous plan)");

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&manifest](size_t a, size_t b) { return manifest[a].id < manifest[b].id; });

  Rng rng(Rng::Derive(policy.sampling_seed, seed_stream::kAugmentSample));
  for (size_t i = 0; i < take; ++i) {
    const size_t j = i + rng.NextBelow(n - i);
    std::swap(order[i], order[j]);
  }
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
            [&manifest](size_t a, size_t b) { return manifest[a].id < manifest[b].id; });

  std::vector<PlanEntry> plan;
  plan.reserve(take * policy.voice_ids.size());
  for (size_t i = 0; i < take; ++i)
    for (const std::string& voice : policy.voice_ids)
      plan.push_back(PlanEntry{manifest[order[i]], voice});
  return plan;
}

inline std::string SkinnedId(const std::string& source_id, const std::string& voice) {
  return source_id + "#skin=" + voice;
}

namespace detail {

// Filesystem-safe basename: unsafe characters become '_' and a short hash of
// the exact id keeps distinct ids distinct after sanitizing.
inline std::string SanitizedBasename(const std::string& id) {
  std::string name;
  name.reserve(id.size());
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '-' || c == '_';
    name.push_back(ok ? c : '_');
  }
  if (name.size() > 80) name.resize(80);
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(Fnv1a64(id.data(), id.size())));
  return name + "-" + std::string(hex, 8);
}

inline uint64_t FileContentHash(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  AF_CHECK(f.good(), "cannot open for hashing: ", path);
  std::ostringstream buf;
  buf << f.rdbuf();
  const std::string bytes = buf.str();
  return Fnv1a64(bytes.data(), bytes.size());
}

inline uint64_t ModelHash(const ConverterModel& model) {
  std::ostringstream buf(std::ios::binary);
  SaveCheckpoint(model, buf);
  const std::string bytes = buf.str();
  return Fnv1a64(bytes.data(), bytes.size());
}

}  // namespace detail

struct ExecError {
  UtteranceRecord source;
  std::string voice;
  std::string message;
};

struct ExecuteResult {
  Manifest records;
  std::vector<ExecError> errors;
  size_t converted = 0;  // conversions actually performed
  size_t skipped = 0;    // satisfied by the resume cache
};

struct ExecuteOptions {
  int workers = 1;
  bool resume = true;  // skip outputs whose cache key matches
};

inline void WriteErrorLedger(const std::vector<ExecError>& errors, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  AF_CHECK(f.good(), "cannot open error ledger for writing: ", path);
  f << kManifestHeader << "\terror\n";
  for (const ExecError& e : errors) {
    const UtteranceRecord& r = e.source;
    std::string msg = e.message;
    for (char& c : msg)
      if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    f << r.id << '\t' << r.audio_path << '\t' << r.speaker_id << '\t' << r.transcript << '\t'
      << r.translation << '\t' << OriginToString(r.origin) << '\t' << r.source_id << '\t'
      << e.voice << '\t' << msg << "\n";
  }
  AF_CHECK(f.good(), "short write to error ledger: ", path);
}

// Runs every plan entry through the converter and writes one wav per entry
// under out_dir. A sidecar key under out_dir/.augcache (hash of model bytes,
// source bytes, and voice) makes reruns skip finished work. Entry failures
// go to the error ledger and do not stop the rest; slots are pre-assigned so
// the output order equals plan order no matter how many workers run.
inline ExecuteResult ExecutePlan(const std::vector<PlanEntry>& plan, const ConverterModel& model,
                                 const std::string& out_dir, const ExecuteOptions& opt = {}) {
  AF_CHECK(!plan.empty(), "execute: empty plan");
  AF_CHECK(opt.workers >= 1, "execute: workers must be >= 1, got ", opt.workers);
  model.Validate();
  for (const PlanEntry& e : plan) model.speaker_index(e.voice);  // fail fast on unknown voices

  namespace fs = std::filesystem;
  const fs::path dir(out_dir);
  const fs::path cache_dir = dir / ".augcache";
  fs::create_directories(cache_dir);

  const uint64_t model_hash = detail::ModelHash(model);

  struct Slot {
    bool ok = false;
    bool skipped = false;
    UtteranceRecord record;
    std::string message;
  };
  std::vector<Slot> slots(plan.size());
  std::atomic<size_t> cursor{0};

  auto run_entry = [&](size_t i) {
    Slot& slot = slots[i];
    const PlanEntry& entry = plan[i];
    const std::string out_id = SkinnedId(entry.source.id, entry.voice);
    const fs::path wav_path = dir / (detail::SanitizedBasename(out_id) + ".wav");
    const fs::path key_path = cache_dir / (detail::SanitizedBasename(out_id) + ".key");
    try {
      const uint64_t src_hash = detail::FileContentHash(entry.source.audio_path);
      const std::string key = detail::Str(model_hash, ":", src_hash, ":", entry.voice);

      bool cached = false;
      if (opt.resume && fs::exists(wav_path) && fs::exists(key_path)) {
        std::ifstream kf(key_path);
        std::string existing;
        std::getline(kf, existing);
        cached = existing == key;
      }
      if (!cached) {
        const Waveform source = ReadWav(entry.source.audio_path);
        const ConvertResult converted = Convert(model, source, entry.voice);
        const fs::path tmp = wav_path.string() + ".tmp";
        WriteWav(converted.audio, tmp.string());
        fs::rename(tmp, wav_path);
        std::ofstream kf(key_path, std::ios::binary | std::ios::trunc);
        kf << key << "\n";
        AF_CHECK(kf.good(), "cannot write cache key: ", key_path.string());
      }
      slot.skipped = cached;
      UtteranceRecord r;
      r.id = out_id;
      r.audio_path = wav_path.string();
      r.speaker_id = entry.voice;
      r.transcript = entry.source.transcript;
      r.translation = entry.source.translation;
      r.origin = Origin::kSkinned;
      r.source_id = entry.source.id;
      r.skin_voice = entry.voice;
      r.Validate();
      slot.record = std::move(r);
      slot.ok = true;
    } catch (const std::exception& e) {
      slot.ok = false;
      slot.message = e.what();
    }
  };

  auto worker = [&] {
    for (;;) {
      const size_t i = cursor.fetch_add(1);
      if (i >= plan.size()) return;
      run_entry(i);
    }
  };
  if (opt.workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(opt.workers);
    for (int w = 0; w < opt.workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  ExecuteResult result;
  for (size_t i = 0; i < plan.size(); ++i) {
    if (slots[i].ok) {
      result.records.push_back(std::move(slots[i].record));
      if (slots[i].skipped)
        ++result.skipped;
      else
        ++result.converted;
    } else {
      result.errors.push_back(ExecError{plan[i].source, plan[i].voice, slots[i].message});
      LogWarn("skin failed for '", plan[i].source.id, "' -> ", plan[i].voice, ": ",
              slots[i].message);
    }
  }
  return result;
}

// Union of manifests; any id collision across (or within) inputs is an error
// naming the id.
inline Manifest Merge(const std::vector<Manifest>& manifests) {
  Manifest out;
  std::unordered_set<std::string> seen;
  for (const Manifest& m : manifests)
    for (const UtteranceRecord& r : m) {
      r.Validate();
      AF_CHECK(seen.insert(r.id).second, "merge: duplicate utterance id '", r.id, "'");
      out.push_back(r);
    }
  return out;
}

enum class LeakageMode { kBySpeaker, kByTranscript };

// Lowercase, ASCII punctuation stripped, whitespace runs collapsed to one
// space, trimmed. The occurrence-removal key for by_transcript.
inline std::string NormalizeTranscript(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char ch : text) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (u < 128 && std::isspace(u)) {
      pending_space = !out.empty();
      continue;
    }
    if (u < 128 && std::ispunct(u)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(u < 128 ? static_cast<char>(std::tolower(u)) : ch);
  }
  return out;
}

// Drops train records that would leak test identity: matching speaker_id, or
// matching normalized transcript. Idempotent; output is always a subset of
// the input. Empty transcripts never count as occurrences.
inline Manifest FilterLeakage(const Manifest& train, const Manifest& test, LeakageMode mode) {
  std::unordered_set<std::string> keys;
  for (const UtteranceRecord& r : test) {
    if (mode == LeakageMode::kBySpeaker) {
      if (!r.speaker_id.empty()) keys.insert(r.speaker_id);
    } else {
      const std::string norm = NormalizeTranscript(r.transcript);
      if (!norm.empty()) keys.insert(norm);
    }
  }
  Manifest out;
  for (const UtteranceRecord& r : train) {
    const std::string key =
        mode == LeakageMode::kBySpeaker ? r.speaker_id : NormalizeTranscript(r.transcript);
    if (!key.empty() && keys.count(key) > 0) continue;
    out.push_back(r);
  }
  return out;
}

struct NormalizedTestset {
  std::string voice;
  Manifest records;
};

struct NormalizeResult {
  std::vector<NormalizedTestset> testsets;
  std::vector<ExecError> errors;
  size_t converted = 0;
  size_t skipped = 0;
};

// One fully-skinned copy of the test set per voice, each under its own
// subdirectory of out_dir.
inline NormalizeResult NormalizeTestset(const Manifest& test, const ConverterModel& model,
                                        const std::vector<std::string>& voices,
                                        const std::string& out_dir,
                                        const ExecuteOptions& opt = {}) {
  AF_CHECK(!test.empty(), "normalize: empty test manifest");
  AF_CHECK(!voices.empty(), "normalize: no voices given");
  ValidateManifest(test, "normalize input");
  namespace fs = std::filesystem;

  NormalizeResult result;
  for (const std::string& voice : voices) {
    std::vector<PlanEntry> plan;
    plan.reserve(test.size());
    for (const UtteranceRecord& r : test) plan.push_back(PlanEntry{r, voice});
    const fs::path voice_dir = fs::path(out_dir) / detail::SanitizedBasename(voice);
    ExecuteResult er = ExecutePlan(plan, model, voice_dir.string(), opt);
    result.converted += er.converted;
    result.skipped += er.skipped;
    for (ExecError& e : er.errors) result.errors.push_back(std::move(e));
    result.testsets.push_back(NormalizedTestset{voice, std::move(er.records)});
  }
  return result;
}

}  // namespace augforge

#endif  // AUGFORGE_CORPUS_HPP_
