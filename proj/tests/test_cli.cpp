#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <string>

#include "saltrk/dataset.hpp"
#include "saltrk/image_io.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string output;
};

Run run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path log = scratch / "cli.log";
  const std::string cmd = std::string("\"") + SALTRK_CLI + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, testutil::read_text(log)};
}

std::string net_flag() { return std::string("--net ") + SALTRK_NET_SPEC + "," + SALTRK_NET_WEIGHTS; }

// 20-frame synthetic sequence written through the CLI itself.
fs::path make_sequence(const testutil::TempDir& tmp) {
  const fs::path seq = tmp / "seq";
  Run r = run_cli("synth --out \"" + seq.string() + "\" --frames 20 --vel 2,1 --seed 5", tmp.path());
  REQUIRE(r.code == 0);
  return seq;
}

std::string track_args(const fs::path& seq, const fs::path& out) {
  return "track --sequence \"" + seq.string() + "\" " + net_flag() + " --init 10,10,12,12 --seed 9 --out \"" +
         out.string() + "\"";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("synth writes frames and ground truth") {
    testutil::TempDir tmp("cli-synth");
    const fs::path seq = tmp / "s";
    Run r = run_cli("synth --out \"" + seq.string() + "\" --frames 5 --vel 2,0", tmp.path());
    REQUIRE(r.code == 0);
    saltrk::SequenceDataset ds = saltrk::load_sequence(seq);
    CHECK(ds.frames.size() == 5);
    REQUIRE(ds.ground_truth.size() == 5);
    CHECK(ds.ground_truth[4].x == 18);
  }

  TEST_CASE("track writes one row per frame and is deterministic") {
    testutil::TempDir tmp("cli-track");
    const fs::path seq = make_sequence(tmp);
    Run a = run_cli(track_args(seq, tmp / "a.csv"), tmp.path());
    REQUIRE_MESSAGE(a.code == 0, a.output);
    Run b = run_cli(track_args(seq, tmp / "b.csv"), tmp.path());
    REQUIRE(b.code == 0);
    const auto rows = saltrk::read_results_csv(tmp / "a.csv");
    CHECK(rows.size() == 20);
    CHECK(rows.front() == saltrk::Box{10, 10, 12, 12});
    CHECK(testutil::read_text(tmp / "a.csv") == testutil::read_text(tmp / "b.csv"));
  }

  TEST_CASE("track dump directory receives per-frame maps") {
    testutil::TempDir tmp("cli-dump");
    const fs::path seq = make_sequence(tmp);
    const fs::path dump = tmp / "dump";
    Run r = run_cli(track_args(seq, tmp / "r.csv") + " --dump-dir \"" + dump.string() + "\"", tmp.path());
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dump / "saliency_0002.pgm"));
    CHECK(fs::exists(dump / "posterior_0020.pgm"));
  }

  TEST_CASE("usage and input errors exit 2") {
    testutil::TempDir tmp("cli-usage");
    const fs::path seq = make_sequence(tmp);
    CHECK(run_cli("track --sequence \"" + seq.string() + "\" " + net_flag() + " --out x.csv", tmp.path()).code == 2);
    CHECK(run_cli("", tmp.path()).code == 2);
    CHECK(run_cli("bogus", tmp.path()).code == 2);
    CHECK(run_cli("--help", tmp.path()).code == 0);
    CHECK(run_cli(track_args(tmp / "nowhere", tmp / "r.csv"), tmp.path()).code == 2);
    CHECK(run_cli("track --sequence \"" + seq.string() + "\" --net missing.net,missing.bin --init 10,10,12,12 --out \"" +
                      (tmp / "r.csv").string() + "\"",
                  tmp.path())
              .code == 2);
    CHECK(run_cli("track --sequence \"" + seq.string() + "\" " + net_flag() + " --init 10,10,12 --out \"" +
                      (tmp / "r.csv").string() + "\"",
                  tmp.path())
              .code == 2);
    const std::string env = "SALTRK_THREADS=banana ";
    const std::string cmd =
        env + "\"" + SALTRK_CLI + "\" synth --frames 2 --out \"" + (tmp / "t").string() + "\" > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    CHECK(WEXITSTATUS(status) == 2);
  }

  TEST_CASE("eval of ground truth scores 20/21 and writes curves") {
    testutil::TempDir tmp("cli-eval");
    const fs::path seq = make_sequence(tmp);
    saltrk::SequenceDataset ds = saltrk::load_sequence(seq);
    const fs::path res = tmp / "gt.csv";
    saltrk::write_results_csv(res, ds.ground_truth);
    Run r = run_cli("eval --results \"" + res.string() + "\" --gt \"" + seq.string() + "\"", tmp.path());
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(std::regex_search(r.output, std::regex("auc +0\\.952381")));
    CHECK(std::regex_search(r.output, std::regex("precision@20 +1\\.000000")));
    CHECK(fs::exists(tmp / "gt.csv.success.csv"));
    CHECK(fs::exists(tmp / "gt.csv.precision.csv"));
    const std::string success = testutil::read_text(tmp / "gt.csv.success.csv");
    CHECK(success.rfind("threshold,rate\n", 0) == 0);
  }

  TEST_CASE("eval rejects empty or mismatched results") {
    testutil::TempDir tmp("cli-eval-bad");
    const fs::path seq = make_sequence(tmp);
    testutil::write_text(tmp / "empty.csv", "");
    CHECK(run_cli("eval --results \"" + (tmp / "empty.csv").string() + "\" --gt \"" + seq.string() + "\"", tmp.path())
              .code == 2);
    testutil::write_text(tmp / "short.csv", "1,10,10,12,12\n");
    CHECK(run_cli("eval --results \"" + (tmp / "short.csv").string() + "\" --gt \"" + seq.string() + "\"", tmp.path())
              .code == 2);
  }

  TEST_CASE("dump-saliency writes a max-normalized grayscale image") {
    testutil::TempDir tmp("cli-sal");
    const fs::path seq = make_sequence(tmp);
    const fs::path out = tmp / "sal.pgm";
    Run r = run_cli("dump-saliency --sequence \"" + seq.string() + "\" " + net_flag() +
                        " --init 10,10,12,12 --seed 9 --frame 4 --out \"" + out.string() + "\"",
                    tmp.path());
    REQUIRE_MESSAGE(r.code == 0, r.output);
    saltrk::Image img = saltrk::read_image(out);
    CHECK(img.channels() == 1);
    CHECK(img.width() == 64);
    double mx = 0.0;
    for (double v : img.values()) mx = std::max(mx, v);
    CHECK(mx == 1.0);
  }

  TEST_CASE("segment writes a mask and reports unsolvable trimaps") {
    testutil::TempDir tmp("cli-seg");
    const fs::path seq = make_sequence(tmp);
    const std::string base = "segment --sequence \"" + seq.string() + "\" " + net_flag() +
                             " --init 10,10,12,12 --seed 9 --frame 3 --margin 8 --out \"";
    Run ok = run_cli(base + (tmp / "m.pbm").string() + "\"", tmp.path());
    REQUIRE_MESSAGE(ok.code == 0, ok.output);
    CHECK(fs::exists(tmp / "m.pbm"));

    Run bad = run_cli(base + (tmp / "n.pbm").string() + "\" --fg 1.5", tmp.path());
    CHECK(bad.code == 3);
    CHECK(bad.output.find("unsolvable trimap") != std::string::npos);
  }
}
