#include <doctest.h>

#include <string>

#include <nlohmann/json.hpp>

#include "support/run_cli.hpp"
#include "support/temp_dir.hpp"

using support::run_cli;

namespace {

const char* kScoredInput =
    R"({"id":"r1","prompt_id":"p1","text":"<think>[Clue] warped text [Why fake] letters melt [If real] a font could be stylized</think><answer>Fake</answer>","token_count":300,"truth":"Fake"})"
    "\n"
    R"({"id":"r2","prompt_id":"p1","text":"<answer>Real</answer>","token_count":20,"truth":"Fake"})"
    "\n";

}  // namespace

TEST_CASE("usage errors exit 64") {
  support::TempDir dir;
  auto r = run_cli({}, dir.path());
  CHECK(r.code == 64);
  CHECK(r.err.find("reward") != std::string::npos);
  CHECK(run_cli({"frobnicate"}, dir.path()).code == 64);
  CHECK(run_cli({"toy"}, dir.path()).code == 64);
  CHECK(run_cli({"toy", "train", "--steps", "many"}, dir.path()).code == 64);
  CHECK(run_cli({"--concurrency", "0", "toy", "gradcheck"}, dir.path()).code == 64);
}

TEST_CASE("help exits 0 and documents the environment") {
  support::TempDir dir;
  const auto r = run_cli({"--help"}, dir.path());
  CHECK(r.code == 0);
  CHECK(r.out.find("DIALECTIC_API_KEY") != std::string::npos);
  CHECK(r.out.find("--seed") != std::string::npos);
  CHECK(run_cli({"eval", "detect", "--help"}, dir.path()).code == 0);
}

TEST_CASE("stochastic commands require a seed") {
  support::TempDir dir;
  const auto r = run_cli({"toy", "gradcheck"}, dir.path());
  CHECK(r.code == 1);
  CHECK(r.err.find("--seed") != std::string::npos);
  CHECK(run_cli({"dataset", "synth", "--count", "4", "--output-dir", dir.path().string()}, dir.path()).code == 1);
}

TEST_CASE("gradcheck passes") {
  support::TempDir dir;
  const auto r = run_cli({"toy", "gradcheck", "--seed", "7"}, dir.path());
  CHECK(r.code == 0);
  CHECK(r.out.find("relative error") != std::string::npos);
}

TEST_CASE("dataset validate reports per-line errors") {
  support::TempDir dir;
  CHECK(run_cli({"--seed", "3", "--output-dir", dir.path().string(), "dataset", "synth", "--count", "12"}, dir.path())
            .code == 0);
  const auto good = dir / "synthetic.jsonl";
  CHECK(run_cli({"dataset", "validate", good.string()}, dir.path()).code == 0);

  auto text = support::slurp(good);
  text += "{\"id\":\"broken\"}\nnot json\n";
  const auto bad = dir.write("bad.jsonl", text);
  const auto r = run_cli({"dataset", "validate", bad.string()}, dir.path());
  CHECK(r.code == 1);
  CHECK(r.err.find("line 13") != std::string::npos);
  CHECK(r.err.find("line 14") != std::string::npos);

  const auto stats = run_cli({"dataset", "stats", good.string()}, dir.path());
  CHECK(stats.code == 0);
  CHECK(stats.out.find("12") != std::string::npos);
}

TEST_CASE("reward score and grpo advantages") {
  support::TempDir dir;
  const auto in = dir.write("in.jsonl", kScoredInput);
  const auto od = dir.path().string();
  REQUIRE(run_cli({"--output-dir", od, "reward", "score", in.string()}, dir.path()).code == 0);
  const auto rewards = support::slurp(dir / "rewards.jsonl");
  const auto first = nlohmann::json::parse(rewards.substr(0, rewards.find('\n')));
  CHECK(first["id"] == "r1");
  CHECK(first["r_acc"] == 1.0);
  CHECK(first["r_struc"] == 1.0);
  CHECK(first["r_len"] == 500.0);

  REQUIRE(run_cli({"--output-dir", od, "grpo", "advantages", (dir / "rewards.jsonl").string()}, dir.path()).code == 0);
  const auto adv = support::slurp(dir / "advantages.jsonl");
  const auto a1 = nlohmann::json::parse(adv.substr(0, adv.find('\n')));
  CHECK(a1["advantage"].get<double>() == doctest::Approx(1.0).epsilon(1e-3));

  const auto single = dir.write("single.jsonl", std::string(kScoredInput).substr(0, std::string(kScoredInput).find('\n') + 1));
  REQUIRE(run_cli({"--output-dir", od, "reward", "score", single.string(), "-o", (dir / "s.jsonl").string()}, dir.path())
              .code == 0);
  CHECK(run_cli({"grpo", "advantages", (dir / "s.jsonl").string(), "-o", (dir / "x.jsonl").string()}, dir.path()).code ==
        1);
}

TEST_CASE("unreachable critic is a transport failure unless fallback is set") {
  support::TempDir dir;
  const auto in = dir.write("in.jsonl", kScoredInput);
  const auto od = dir.path().string();
  const auto r = run_cli({"--output-dir", od, "--endpoint", "http://127.0.0.1:9", "reward", "score", in.string(),
                          "--critic", "remote"},
                         dir.path());
  CHECK(r.code == 2);
  CHECK(run_cli({"--output-dir", od, "--endpoint", "http://127.0.0.1:9", "reward", "score", in.string(), "--critic",
                 "remote", "--critic-fallback"},
                dir.path())
            .code == 0);
}

TEST_CASE("toy train is deterministic and reads a config file") {
  support::TempDir dir;
  const auto a = dir / "a.jsonl";
  const auto b = dir / "b.jsonl";
  REQUIRE(run_cli({"--seed", "5", "toy", "train", "--steps", "20", "-o", a.string()}, dir.path()).code == 0);
  REQUIRE(run_cli({"--seed", "5", "toy", "train", "--steps", "20", "-o", b.string()}, dir.path()).code == 0);
  CHECK(support::slurp(a) == support::slurp(b));
  CHECK(!support::slurp(a).empty());

  const auto cfg = dir.write("run.toml", "seed = 5\n");
  const auto c = dir / "c.jsonl";
  REQUIRE(run_cli({"--config", cfg.string(), "toy", "train", "--steps", "20", "-o", c.string()}, dir.path()).code == 0);
  CHECK(support::slurp(a) == support::slurp(c));
}
