// tests/oracles.hpp

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

// Brute-force reference implementations the metric tests compare against.
// Kept deliberately naive: full DP tables, n-grams as token vectors in
// ordered maps, no pooling shortcuts.

#ifndef AUGFORGE_TESTS_ORACLES_HPP_
#define AUGFORGE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "augforge/metrics.hpp"
#include "augforge/rng.hpp"

namespace augforge::testing {

inline size_t OracleEdits(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::vector<size_t>> d(a.size() + 1, std::vector<size_t>(b.size() + 1, 0));
  for (size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (size_t i = 1; i <= a.size(); ++i)
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({sub, d[i - 1][j] + 1, d[i][j - 1] + 1});
    }
  return d[a.size()][b.size()];
}

inline double OracleBleu(const std::vector<ScoredPair>& pairs, int max_n) {
  std::vector<double> matched(max_n, 0.0), attempted(max_n, 0.0);
  double hyp_len = 0.0, ref_len = 0.0;
  for (const ScoredPair& p : pairs) {
    hyp_len += static_cast<double>(p.hypothesis.size());
    ref_len += static_cast<double>(p.reference.size());
    for (int n = 1; n <= max_n; ++n) {
      std::map<std::vector<std::string>, size_t> hyp_counts, ref_counts;
      for (size_t i = 0; i + n <= p.hypothesis.size(); ++i)
        ++hyp_counts[std::vector<std::string>(p.hypothesis.begin() + i,
                                              p.hypothesis.begin() + i + n)];
      for (size_t i = 0; i + n <= p.reference.size(); ++i)
        ++ref_counts[std::vector<std::string>(p.reference.begin() + i,
                                              p.reference.begin() + i + n)];
      for (const auto& [gram, count] : hyp_counts) {
        attempted[n - 1] += static_cast<double>(count);
        const auto it = ref_counts.find(gram);
        if (it != ref_counts.end())
          matched[n - 1] += static_cast<double>(std::min(count, it->second));
      }
    }
  }
  double log_sum = 0.0;
  int used = 0;
  for (int n = 0; n < max_n; ++n) {
    if (attempted[n] == 0.0) continue;
    ++used;
    if (matched[n] == 0.0) return 0.0;
    log_sum += std::log(matched[n] / attempted[n]);
  }
  if (used == 0 || hyp_len == 0.0) return 0.0;
  const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  return 100.0 * bp * std::exp(log_sum / used);
}

inline TokenSeq RandomSeq(Rng* rng, size_t max_len, int vocab) {
  TokenSeq s;
  const size_t len = rng->NextBelow(max_len + 1);
  for (size_t i = 0; i < len; ++i)
    s.push_back(std::string(1, static_cast<char>('a' + rng->NextBelow(vocab))));
  return s;
}

// Every sequence of length 0..max_len over the first `vocab` letters.
inline std::vector<TokenSeq> AllSeqs(int max_len, int vocab) {
  std::vector<TokenSeq> seqs;
  for (int len = 0; len <= max_len; ++len) {
    size_t total = 1;
    for (int i = 0; i < len; ++i) total *= static_cast<size_t>(vocab);
    for (size_t code = 0; code < total; ++code) {
      TokenSeq s;
      size_t c = code;
      for (int i = 0; i < len; ++i) {
        s.push_back(std::string(1, static_cast<char>('a' + c % vocab)));
        c /= vocab;
      }
      seqs.push_back(s);
    }
  }
  return seqs;
}

}  // namespace augforge::testing

#endif  // AUGFORGE_TESTS_ORACLES_HPP_
