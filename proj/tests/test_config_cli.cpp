// tests/test_config_cli.cpp

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

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "augforge/cli.hpp"
#include "augforge/config.hpp"
#include "augforge/dsp.hpp"
#include "testutil.hpp"

using namespace augforge;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = 0;
  std::string out;
  std::string err;
};

RunResult RunCli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  RunResult r;
  r.code = cli::Run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace

TEST_CASE("config parses sections, comments, and types", "[config]") {
  const Config cfg = Config::ParseString(
      "seed = 7\n"
      "# a comment\n"
      "[train]\n"
      "epochs = 12\n"
      "learning_rate = 2e-3\n"
      "leakage = filtered\n"
      "\n"
      "[augment]\n"
      "voices = alpha, brava , carol\n"
      "include_original = true\n",
      "test.cfg");
  REQUIRE(cfg.GetU64("", "seed", 0) == 7);
  REQUIRE(cfg.GetInt("train", "epochs", 0) == 12);
  REQUIRE(cfg.GetReal("train", "learning_rate", 0.0) == Catch::Approx(2e-3));
  REQUIRE(cfg.GetString("train", "leakage", "") == "filtered");
  REQUIRE(cfg.GetList("augment", "voices") ==
          std::vector<std::string>{"alpha", "brava", "carol"});
  REQUIRE(cfg.GetBool("augment", "include_original", false));
  REQUIRE(cfg.GetInt("train", "missing", 42) == 42);
}

TEST_CASE("config rejects duplicates and bad values with origin info", "[config]") {
  REQUIRE_THROWS_AS(Config::ParseString("[a]\nx = 1\nx = 2\n", "dup.cfg"), Error);

  const Config cfg = Config::ParseString("[train]\nepochs = soon\n", "bad.cfg");
  try {
    cfg.GetInt("train", "epochs", 0);
    FAIL("expected an error");
  } catch (const Error& e) {
    const std::string what = e.what();
    REQUIRE(what.find("bad.cfg") != std::string::npos);
    REQUIRE(what.find("train.epochs") != std::string::npos);
    REQUIRE(what.find("soon") != std::string::npos);
  }
}

TEST_CASE("cli rejects unknown keys with a suggestion", "[cli]") {
  testing::TempDir dir("cli_unknown");
  testing::WriteTextFile(dir.file("c.cfg"),
                         "[train]\n"
                         "manifest = missing.tsv\n"
                         "out_dir = out\n"
                         "leakage = filtered\n"
                         "learningrate = 0.01\n");
  const RunResult r = RunCli({"train-skin", "--config", dir.file("c.cfg")});
  REQUIRE(r.code == 1);
  REQUIRE(r.err.find("learningrate") != std::string::npos);
  REQUIRE(r.err.find("learning_rate") != std::string::npos);
}

TEST_CASE("cli lists every validation failure before aborting", "[cli]") {
  testing::TempDir dir("cli_multi");
  testing::WriteTextFile(dir.file("c.cfg"),
                         "[train]\n"
                         "manifest = /nonexistent/m.tsv\n"
                         "epoochs = 5\n");
  const RunResult r = RunCli({"train-skin", "--config", dir.file("c.cfg")});
  REQUIRE(r.code == 1);
  // unknown key, unreadable manifest, missing leakage declaration, missing out_dir
  REQUIRE(r.err.find("epoochs") != std::string::npos);
  REQUIRE(r.err.find("m.tsv") != std::string::npos);
  REQUIRE(r.err.find("leakage") != std::string::npos);
  REQUIRE(r.err.find("out_dir") != std::string::npos);
}

TEST_CASE("score command prints two decimals and honors identity", "[cli]") {
  testing::TempDir dir("cli_score");
  testing::WriteTextFile(dir.file("hyp.txt"), "the cat sat\nhello there\n");
  testing::WriteTextFile(dir.file("ref.txt"), "the cat sat\nhello there\n");
  const RunResult bleu =
      RunCli({"score", "--metric", "bleu", dir.file("hyp.txt"), dir.file("ref.txt")});
  REQUIRE(bleu.code == 0);
  REQUIRE(bleu.out == "100.00\n");
  const RunResult wer =
      RunCli({"score", "--metric", "wer", dir.file("hyp.txt"), dir.file("ref.txt")});
  REQUIRE(wer.code == 0);
  REQUIRE(wer.out == "0.00\n");
}

TEST_CASE("score command reports line count mismatches", "[cli]") {
  testing::TempDir dir("cli_mismatch");
  testing::WriteTextFile(dir.file("hyp.txt"), "a\nb\nc\n");
  testing::WriteTextFile(dir.file("ref.txt"), "a\nb\nc\nd\n");
  const RunResult r =
      RunCli({"score", "--metric", "wer", dir.file("hyp.txt"), dir.file("ref.txt")});
  REQUIRE(r.code == 1);
  REQUIRE(r.err.find("3 vs 4") != std::string::npos);
}

TEST_CASE("score command writes a machine-readable report", "[cli]") {
  testing::TempDir dir("cli_report");
  testing::WriteTextFile(dir.file("hyp.txt"), "aa bb\n");
  testing::WriteTextFile(dir.file("ref.txt"), "aa bb\n");
  const RunResult r = RunCli({"score", "--metric", "bleu", dir.file("hyp.txt"),
                              dir.file("ref.txt"), "--report", dir.file("rep.txt")});
  REQUIRE(r.code == 0);
  const std::string rep = testing::ReadTextFile(dir.file("rep.txt"));
  REQUIRE(rep.find("metric=bleu") != std::string::npos);
  REQUIRE(rep.find("score=100") != std::string::npos);
  REQUIRE(rep.find("pairs=1") != std::string::npos);
}

TEST_CASE("merge command rejects colliding manifests", "[cli]") {
  testing::TempDir dir("cli_merge");
  const std::string header =
      "# id\taudio_path\tspeaker_id\ttranscript\ttranslation\torigin\tsource_id\tskin_voice\n";
  testing::WriteTextFile(dir.file("a.tsv"), header + "u1\t/a.wav\ts\thi\t\toriginal\t\t\n");
  testing::WriteTextFile(dir.file("b.tsv"), header + "u1\t/b.wav\ts\tyo\t\toriginal\t\t\n");
  const RunResult bad = RunCli(
      {"merge", dir.file("a.tsv"), dir.file("b.tsv"), "--out", dir.file("m.tsv")});
  REQUIRE(bad.code == 1);
  REQUIRE(bad.err.find("u1") != std::string::npos);

  testing::WriteTextFile(dir.file("c.tsv"), header + "u2\t/c.wav\ts\tok\t\toriginal\t\t\n");
  const RunResult good = RunCli(
      {"merge", dir.file("a.tsv"), dir.file("c.tsv"), "--out", dir.file("m.tsv")});
  REQUIRE(good.code == 0);
  const Manifest merged = ReadManifest(dir.file("m.tsv"));
  REQUIRE(merged.size() == 2);
}

TEST_CASE("filter command drops leaking speakers", "[cli]") {
  testing::TempDir dir("cli_filter");
  const std::string header =
      "# id\taudio_path\tspeaker_id\ttranscript\ttranslation\torigin\tsource_id\tskin_voice\n";
  testing::WriteTextFile(dir.file("train.tsv"), header +
                                                    "t1\t/1.wav\talice\thi\t\toriginal\t\t\n"
                                                    "t2\t/2.wav\tbob\tyo\t\toriginal\t\t\n");
  testing::WriteTextFile(dir.file("test.tsv"), header + "x1\t/x.wav\talice\thm\t\toriginal\t\t\n");
  const RunResult r = RunCli({"filter", "--train", dir.file("train.tsv"), "--test",
                              dir.file("test.tsv"), "--mode", "by_speaker", "--out",
                              dir.file("kept.tsv")});
  REQUIRE(r.code == 0);
  const Manifest kept = ReadManifest(dir.file("kept.tsv"));
  REQUIRE(kept.size() == 1);
  REQUIRE(kept[0].id == "t2");
  REQUIRE(r.out.find("kept 1 of 2") != std::string::npos);
}

TEST_CASE("report command assembles the normalization summary", "[cli]") {
  testing::TempDir dir("cli_reportcmd");
  std::string scores = "# voice\tscore\nunmodified\t4.5\n";
  for (int v = 1; v <= 8; ++v)
    scores += detail::Str("voice", v, "\t", static_cast<double>(v), "\n");
  testing::WriteTextFile(dir.file("scores.tsv"), scores);
  const RunResult r = RunCli({"report", "--scores", dir.file("scores.tsv"), "--out",
                              dir.file("summary.txt")});
  REQUIRE(r.code == 0);
  REQUIRE(r.out.find("mean 4.50") != std::string::npos);
  REQUIRE(r.out.find("within one std: yes") != std::string::npos);
  const std::string rep = testing::ReadTextFile(dir.file("summary.txt"));
  REQUIRE(rep.find("within_one_std=true") != std::string::npos);

  // a missing score cell is a hard error, not a silent zero
  testing::WriteTextFile(dir.file("empty.tsv"), "unmodified\t\nv1\t1\nv2\t2\n");
  const RunResult bad = RunCli({"report", "--scores", dir.file("empty.tsv")});
  REQUIRE(bad.code == 1);
}

TEST_CASE("specaugment command writes augmented features and logs the fraction", "[cli]") {
  testing::TempDir dir("cli_spec");
  fs::create_directories(dir.file("in"));
  for (int i = 0; i < 20; ++i) {
    MelSpectrogram m;
    m.frames = Matrix(30, 8);
    Rng rng(static_cast<uint64_t>(i) + 1);
    for (double& v : m.frames.data) v = rng.NextDouble();
    WriteMelf(m, dir.file(detail::Str("in/f", i, ".melf")));
  }
  testing::WriteTextFile(dir.file("c.cfg"),
                         "[specaugment]\n"
                         "warp_w = 4\n"
                         "freq_mask_f = 3\n"
                         "time_mask_t = 8\n"
                         "p = 0.5\n"
                         "batch_size = 1\n");
  const RunResult r = RunCli({"specaugment", "--config", dir.file("c.cfg"), "--out",
                              dir.file("out"), dir.file("in"), "--seed", "3"});
  INFO(r.err);
  REQUIRE(r.code == 0);
  size_t produced = 0;
  for (const auto& e : fs::directory_iterator(dir.file("out"))) {
    REQUIRE(e.path().extension() == ".melf");
    ++produced;
  }
  REQUIRE(produced == 20);
  REQUIRE(r.out.find("augmented ") != std::string::npos);
  REQUIRE(r.out.find("/20 batches") != std::string::npos);

  // deterministic across reruns with the same seed
  const RunResult again = RunCli({"specaugment", "--config", dir.file("c.cfg"), "--out",
                                  dir.file("out2"), dir.file("in"), "--seed", "3"});
  REQUIRE(again.code == 0);
  for (int i = 0; i < 20; ++i) {
    const std::string name = detail::Str("f", i, ".melf");
    REQUIRE(testing::ReadTextFile(dir.file("out/" + name)) ==
            testing::ReadTextFile(dir.file("out2/" + name)));
  }
}

TEST_CASE("cli usage errors exit with code 1 and help with 0", "[cli]") {
  const RunResult help = RunCli({"--help"});
  REQUIRE(help.code == 0);
  REQUIRE(help.out.find("train-skin") != std::string::npos);

  const RunResult nothing = RunCli({});
  REQUIRE(nothing.code == 1);

  const RunResult unknown = RunCli({"frobnicate"});
  REQUIRE(unknown.code == 1);

  const RunResult missing_metric = RunCli({"score", "a", "b"});
  REQUIRE(missing_metric.code == 1);
}
