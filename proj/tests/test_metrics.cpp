// tests/test_metrics.cpp

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

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "augforge/metrics.hpp"
#include "augforge/rng.hpp"
#include "oracles.hpp"

using namespace augforge;
using testing::OracleBleu;
using testing::OracleEdits;
using testing::RandomSeq;

TEST_CASE("tokenizer splits on space and isolates punctuation", "[metrics]") {
  const TokenSeq t = Tokenize("Hello, world!  it's  12:30.");
  const TokenSeq want = {"Hello", ",", "world", "!", "it", "'", "s", "12", ":", "30", "."};
  REQUIRE(t == want);
  const TokenSeq lower = Tokenize("Hello WORLD", true);
  REQUIRE(lower == TokenSeq{"hello", "world"});
}

TEST_CASE("tokenizer keeps non-ascii bytes inside words", "[metrics]") {
  const TokenSeq t = Tokenize("na\xc3\xafve plan");
  REQUIRE(t.size() == 2);
  REQUIRE(t[0] == "na\xc3\xafve");
}

TEST_CASE("wer matches the brute-force oracle on random pairs", "[metrics]") {
  Rng rng(404);
  for (int round = 0; round < 1000; ++round) {
    TokenSeq hyp = RandomSeq(&rng, 12, 4);
    TokenSeq ref = RandomSeq(&rng, 12, 4);
    if (ref.empty()) ref.push_back("a");
    std::vector<ScoredPair> pairs(1);
    pairs[0].hypothesis = hyp;
    pairs[0].reference = ref;
    const double want =
        static_cast<double>(OracleEdits(hyp, ref)) / static_cast<double>(ref.size());
    REQUIRE(Wer(pairs) == Catch::Approx(want).margin(1e-12));
  }
}

TEST_CASE("wer pools edits over the corpus, not per-line rates", "[metrics]") {
  std::vector<ScoredPair> pairs(2);
  pairs[0].hypothesis = {"a"};
  pairs[0].reference = {"a"};
  pairs[1].hypothesis = {"x", "y", "z"};
  pairs[1].reference = {"a", "b", "c", "d", "e", "f", "g", "h", "i"};
  // 9 edits over 10 reference tokens, not mean(0, 1)
  REQUIRE(Wer(pairs) == Catch::Approx(0.9).margin(1e-12));
}

TEST_CASE("wer rejects empty references with the pair index", "[metrics]") {
  std::vector<ScoredPair> pairs(2);
  pairs[0].hypothesis = {"a"};
  pairs[0].reference = {"a"};
  pairs[1].hypothesis = {"b"};
  try {
    Wer(pairs);
    FAIL("expected an error");
  } catch (const Error& e) {
    REQUIRE(std::string(e.what()).find("2") != std::string::npos);
  }
}

TEST_CASE("bleu matches an independent recomputation on all tiny corpora", "[metrics]") {
  // exhaustive: every (hyp, ref) pair over a 2-letter vocabulary with
  // lengths 0..5 per side, scored as 1-pair corpora
  const std::vector<TokenSeq> seqs = testing::AllSeqs(5, 2);
  size_t checked = 0;
  for (const TokenSeq& hyp : seqs)
    for (const TokenSeq& ref : seqs) {
      std::vector<ScoredPair> pairs(1);
      pairs[0].hypothesis = hyp;
      pairs[0].reference = ref;
      const double got = Bleu(pairs, {});
      const double want = OracleBleu(pairs, 4);
      ++checked;
      REQUIRE(got == Catch::Approx(want).margin(1e-9));
    }
  REQUIRE(checked == seqs.size() * seqs.size());
}

TEST_CASE("bleu pools counts across a multi-pair corpus", "[metrics]") {
  Rng rng(77);
  for (int round = 0; round < 200; ++round) {
    std::vector<ScoredPair> pairs(3);
    for (ScoredPair& p : pairs) {
      p.hypothesis = RandomSeq(&rng, 8, 3);
      p.reference = RandomSeq(&rng, 8, 3);
    }
    REQUIRE(Bleu(pairs, {}) == Catch::Approx(OracleBleu(pairs, 4)).margin(1e-9));
  }
}

TEST_CASE("identity corpus scores 100 bleu and 0 wer", "[metrics]") {
  std::vector<ScoredPair> pairs(3);
  pairs[0].hypothesis = pairs[0].reference = Tokenize("the cat sat on the mat");
  pairs[1].hypothesis = pairs[1].reference = Tokenize("a stitch in time saves nine");
  pairs[2].hypothesis = pairs[2].reference = Tokenize("hello");
  REQUIRE(Bleu(pairs, {}) == Catch::Approx(100.0).margin(1e-9));
  REQUIRE(Wer(pairs) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("bleu smoothing only lifts zero counts at higher orders", "[metrics]") {
  std::vector<ScoredPair> pairs(1);
  pairs[0].hypothesis = Tokenize("a b c d");
  pairs[0].reference = Tokenize("a x c y");
  BleuOptions plain, smooth;
  smooth.smoothing = true;
  REQUIRE(Bleu(pairs, plain) == 0.0);  // no bigram match
  REQUIRE(Bleu(pairs, smooth) > 0.0);
  // unigram-only corpora are unaffected by smoothing
  std::vector<ScoredPair> uni(1);
  uni[0].hypothesis = Tokenize("a");
  uni[0].reference = Tokenize("a");
  REQUIRE(Bleu(uni, plain) == Catch::Approx(Bleu(uni, smooth)).margin(1e-9));
}

TEST_CASE("brevity penalty punishes short hypotheses", "[metrics]") {
  std::vector<ScoredPair> shorter(1), equal(1);
  shorter[0].hypothesis = Tokenize("the cat sat");
  shorter[0].reference = Tokenize("the cat sat on the mat");
  equal[0].hypothesis = Tokenize("the cat sat on the mat");
  equal[0].reference = Tokenize("the cat sat on the mat");
  REQUIRE(Bleu(shorter, {}) < Bleu(equal, {}));
  // analytic value: all n-gram precisions are 1, bp = exp(1 - 6/3)
  REQUIRE(Bleu(shorter, {}) == Catch::Approx(100.0 * std::exp(1.0 - 2.0)).margin(1e-9));
}

TEST_CASE("normalization report computes population statistics", "[metrics]") {
  const std::vector<double> voices = {1, 2, 3, 4, 5, 6, 7, 8};
  const NormalizationReport rep = MakeNormalizationReport(voices, 4.5);
  REQUIRE(rep.mean == Catch::Approx(4.5).margin(1e-12));
  REQUIRE(rep.std_dev == Catch::Approx(std::sqrt(5.25)).margin(1e-12));
  REQUIRE(rep.within_one_std);

  const NormalizationReport far = MakeNormalizationReport(voices, 9.0);
  REQUIRE_FALSE(far.within_one_std);

  // boundary: |unmod - mean| == std counts as within
  const NormalizationReport edge = MakeNormalizationReport({2.0, 4.0}, 4.0);
  REQUIRE(edge.std_dev == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(edge.within_one_std);
}

TEST_CASE("normalization report needs at least two voices", "[metrics]") {
  REQUIRE_THROWS_AS(MakeNormalizationReport({1.0}, 1.0), Error);
}
