// include/augforge/metrics.hpp

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

#ifndef AUGFORGE_METRICS_HPP_
#define AUGFORGE_METRICS_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "augforge/common.hpp"

namespace augforge {

using TokenSeq = std::vector<std::string>;

struct ScoredPair {
  TokenSeq hypothesis;
  TokenSeq reference;
};

// Splits on whitespace after isolating each ASCII punctuation character as
// its own token. Bytes outside ASCII are kept inside word tokens, so UTF-8
// text passes through unsplit. The rule set is fixed so scores are
// reproducible bit-for-bit; they are comparable within this toolkit, not
// with externally tokenized scores.
inline TokenSeq Tokenize(const std::string& text, bool lowercase = false) {
  TokenSeq out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char ch : text) {
    const unsigned char u = static_cast<unsigned char>(ch);
    if (u < 128 && std::isspace(u)) {
      flush();
    } else if (u < 128 && std::ispunct(u)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(lowercase && u < 128 ? static_cast<char>(std::tolower(u)) : ch);
    }
  }
  flush();
  return out;
}

// Unit-cost Levenshtein distance over token sequences (two-row DP).
template <typename Seq>
size_t EditDistance(const Seq& a, const Seq& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<size_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = j;
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= m; ++j) {
      const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// Corpus WER: total edits over total reference tokens (not a mean of
// per-pair rates).
inline double Wer(const std::vector<ScoredPair>& pairs) {
  AF_CHECK(!pairs.empty(), "Wer: empty corpus");
  size_t edits = 0, ref_tokens = 0;
  for (size_t i = 0; i < pairs.size(); ++i) {
    AF_CHECK(!pairs[i].reference.empty(), "Wer: empty reference in pair ", i + 1);
    edits += EditDistance(pairs[i].hypothesis, pairs[i].reference);
    ref_tokens += pairs[i].reference.size();
  }
  return static_cast<double>(edits) / static_cast<double>(ref_tokens);
}

namespace detail {

// n-gram occurrence counts; tokens are joined with a 0x1f separator, which
// cannot appear in whitespace-split tokens.
inline std::unordered_map<std::string, size_t> NgramCounts(const TokenSeq& toks, size_t n) {
  std::unordered_map<std::string, size_t> counts;
  if (toks.size() < n) return counts;
  for (size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key = toks[i];
    for (size_t j = 1; j < n; ++j) {
      key.push_back('\x1f');
      key += toks[i + j];
    }
    ++counts[key];
  }
  return counts;
}

}  // namespace detail

struct BleuOptions {
  int max_n = 4;
  // Add-one smoothing on the match/attempt counts of orders >= 2. Off by
  // default: any zero precision then makes the whole score zero.
  bool smoothing = false;
};

// Corpus-level BLEU in [0, 100]: clipped modified n-gram precisions pooled
// over the corpus, uniform-weight geometric mean, times the brevity penalty
// exp(min(0, 1 - ref_len/hyp_len)). Single reference per hypothesis.
// Orders longer than every hypothesis in the corpus are excluded from the
// geometric mean rather than scored as zero.
inline double Bleu(const std::vector<ScoredPair>& pairs, const BleuOptions& opt = {}) {
  AF_CHECK(!pairs.empty(), "Bleu: empty corpus");
  AF_CHECK(opt.max_n >= 1, "Bleu: need max_n >= 1");
  const size_t max_n = static_cast<size_t>(opt.max_n);

  std::vector<double> matched(max_n, 0.0), attempted(max_n, 0.0);
  double hyp_len = 0.0, ref_len = 0.0;
  for (const ScoredPair& pair : pairs) {
    hyp_len += static_cast<double>(pair.hypothesis.size());
    ref_len += static_cast<double>(pair.reference.size());
    for (size_t n = 1; n <= max_n; ++n) {
      if (pair.hypothesis.size() < n) continue;
      attempted[n - 1] += static_cast<double>(pair.hypothesis.size() - n + 1);
      const auto hyp_counts = detail::NgramCounts(pair.hypothesis, n);
      const auto ref_counts = detail::NgramCounts(pair.reference, n);
      for (const auto& [ngram, count] : hyp_counts) {
        const auto it = ref_counts.find(ngram);
        if (it != ref_counts.end())
          matched[n - 1] += static_cast<double>(std::min(count, it->second));
      }
    }
  }

  if (hyp_len == 0.0) return 0.0;
  double log_prec_sum = 0.0;
  size_t orders = 0;
  for (size_t n = 1; n <= max_n; ++n) {
    if (attempted[n - 1] == 0.0) continue;  // no hypothesis long enough for this order
    double m = matched[n - 1], a = attempted[n - 1];
    if (opt.smoothing && n >= 2) {
      m += 1.0;
      a += 1.0;
    }
    if (m == 0.0) return 0.0;
    log_prec_sum += std::log(m / a);
    ++orders;
  }
  if (orders == 0) return 0.0;
  const double bp = std::exp(std::min(0.0, 1.0 - ref_len / hyp_len));
  return 100.0 * bp * std::exp(log_prec_sum / static_cast<double>(orders));
}

// Mean / population-std summary for single-voice test-set scores against the
// unmodified test set.
struct NormalizationReport {
  std::vector<double> per_voice_scores;
  double mean = 0.0;
  double std_dev = 0.0;  // population standard deviation
  double unmodified_score = 0.0;
  bool within_one_std = false;
};

inline NormalizationReport MakeNormalizationReport(const std::vector<double>& per_voice,
                                                   double unmodified) {
  AF_CHECK(per_voice.size() >= 2, "normalization report: need at least 2 voice scores, got ",
           per_voice.size(), " (std undefined)");
  NormalizationReport rep;
  rep.per_voice_scores = per_voice;
  rep.unmodified_score = unmodified;
  rep.mean = PairwiseMean(per_voice);
  double ss = 0.0;
  for (double v : per_voice) ss += (v - rep.mean) * (v - rep.mean);
  rep.std_dev = std::sqrt(ss / static_cast<double>(per_voice.size()));
  rep.within_one_std = std::fabs(unmodified - rep.mean) <= rep.std_dev;
  return rep;
}

}  // namespace augforge

#endif  // AUGFORGE_METRICS_HPP_
