#include <doctest.h>

#include <cstdlib>
#include <string>
#include <sys/wait.h>

#include "test_util.hpp"

namespace {

const std::string kCli = ADAPTLM_CLI_PATH;

int cli(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("exit codes") {
    testutil::TempDir t;
    CHECK(cli("--version") == 0);
    CHECK(cli("--help") == 0);
    CHECK(cli("frobnicate") == 1);
    CHECK(cli("train") == 1);                                               // no out_dir
    CHECK(cli("train out_dir=" + (t / "o").string() + " bogus=1") == 1);   // unknown key
    CHECK(cli("train out_dir=" + (t / "o").string() + " corpus=/nonexistent") == 1);
    testutil::spit(t / "bad.txt", "#text t g\n\n");
    const int code = cli("train out_dir=" + (t / "o").string() + " corpus=" + (t / "bad.txt").string());
    CHECK((code == 1 || code == 2));
    testutil::spit(t / "junk.ckpt", "not a checkpoint");
    REQUIRE(cli("gen-stimuli kind=cyclic out_dir=" + (t / "c").string()) == 0);
    REQUIRE(cli("train layers=1 hidden=4 embed=4 epochs=1 corpus=" + (t / "c/corpus.txt").string() +
                " out_dir=" + (t / "m").string()) == 0);
    CHECK(cli("adapt-eval checkpoint=" + (t / "junk.ckpt").string() + " vocab=" + (t / "m/vocab.txt").string() +
              " corpus=" + (t / "c/corpus.txt").string() + " out_dir=" + (t / "ae").string()) == 2);
    // Sum-loss adaptation at an absurd rate loses finite weights.
    CHECK(cli("adapt-eval lr=1e300 loss=sum checkpoint=" + (t / "m/model.ckpt").string() + " vocab=" +
              (t / "m/vocab.txt").string() + " corpus=" + (t / "c/corpus.txt").string() + " out_dir=" +
              (t / "div").string()) == 3);
    CHECK(cli("validate " + (t / "m").string()) == 0);
    testutil::spit(t / "m/train.json", "{}");
    CHECK(cli("validate " + (t / "m").string()) == 2);
  }

  TEST_CASE("config files, overrides and byte-identical reruns") {
    testutil::TempDir t;
    REQUIRE(cli("gen-stimuli kind=text_specific texts=2 per_text=5 out_dir=" + (t / "ts").string()) == 0);
    REQUIRE(cli("gen-stimuli kind=background sentences=400 out_dir=" + (t / "bg").string()) == 0);
    testutil::spit(t / "train.cfg", "# tiny\nlayers = 1\nhidden = 4\nembed = 4\nepochs = 3\nprecision = f64\ncorpus = " +
                                        (t / "bg/corpus.txt").string() + "\n");
    for (const std::string run : {"r1", "r2"}) {
      REQUIRE(cli("train --config " + (t / "train.cfg").string() + " epochs=1 out_dir=" + (t / run / "m").string()) == 0);
      REQUIRE(cli("adapt-eval precision=f64 lr=0.5 corpus=" + (t / "ts/corpus.txt").string() + " checkpoint=" +
                  (t / run / "m/model.ckpt").string() + " vocab=" + (t / run / "m/vocab.txt").string() +
                  " out_dir=" + (t / run / "ae").string()) == 0);
    }
    const auto log = testutil::slurp(t / "r1/m/train_log.tsv");
    CHECK(std::count(log.begin(), log.end(), '\n') == 2);  // header plus the one overridden epoch
    for (const std::string f : {"m/model.ckpt", "m/vocab.txt", "m/train_log.tsv", "ae/report.json",
                                "ae/surprisal_adaptive.tsv", "ae/comparison.tsv"}) {
      CAPTURE(f);
      CHECK(testutil::slurp(t / "r1" / f) == testutil::slurp(t / "r2" / f));
    }
    CHECK(cli("validate " + (t / "r1/ae").string()) == 0);
  }
}
