#include <doctest.h>

#include <cmath>
#include <memory>

#include <nlohmann/json.hpp>

#include "dialectic/backends.hpp"
#include "dialectic/errors.hpp"
#include "dialectic/reward.hpp"
#include "support/reward_fixtures.hpp"

using namespace dialectic;

namespace {

class DownCritic final : public Critic {
 public:
  double score(std::string_view) override { throw TransportError("connection refused"); }
};

class NanCritic final : public Critic {
 public:
  double score(std::string_view) override { return std::nan(""); }
};

RewardBreakdown run_fixture(const fixtures::RewardFixture& f) {
  std::unique_ptr<Critic> critic;
  if (f.fixed_critic)
    critic = std::make_unique<FixedCritic>(*f.fixed_critic);
  else
    critic = std::make_unique<MockCritic>();
  return reward_total(parse(f.text), f.tokens, f.truth, *critic, f.weights, f.length);
}

}  // namespace

TEST_CASE("reward fixtures match hand-computed breakdowns") {
  const auto all = fixtures::reward_fixtures();
  REQUIRE(all.size() >= 20);
  for (const auto& f : all) {
    CAPTURE(f.name);
    const auto b = run_fixture(f);
    CHECK(b.accuracy == f.acc);
    CHECK(b.format == f.fmt);
    CHECK(b.structure == f.struc);
    CHECK(b.logic == f.logic);
    CHECK(b.length == f.len);
    CHECK(b.total == fixtures::expected_total_bits(f));
    CHECK(b.total == doctest::Approx(f.total).epsilon(1e-12));
    CHECK_FALSE(b.critic_degraded);
  }
}

TEST_CASE("total decomposes exactly into weighted components") {
  for (const auto& f : fixtures::reward_fixtures()) {
    CAPTURE(f.name);
    const auto b = run_fixture(f);
    const auto& w = f.weights;
    const double expected = w.accuracy * b.accuracy + w.format * b.format + w.structure * b.structure +
                            w.logic * b.logic + w.length * b.length;
    CHECK(b.total == expected);
    CHECK(weighted_total(b, w) == b.total);
  }
}

TEST_CASE("length reward boundary cases") {
  const LengthConfig cfg{1000, false};
  CHECK(reward_length(1000, true, cfg) == 0.0);
  CHECK(reward_length(300, true, cfg) == 500.0);
  CHECK(reward_length(500, true, cfg) == 500.0);
  CHECK(reward_length(0, true, cfg) == 500.0);
  CHECK(reward_length(200, false, cfg) == -800.0);
  CHECK(reward_length(1500, false, cfg) == 0.0);
  CHECK(reward_length(1000, false, cfg) == 0.0);
  CHECK(reward_length(0, false, cfg) == -1000.0);

  const LengthConfig norm{1000, true};
  CHECK(reward_length(300, true, norm) == 0.5);
  CHECK(reward_length(200, false, norm) == -0.8);

  CHECK_THROWS_AS(reward_length(10, true, LengthConfig{0, false}), std::invalid_argument);
}

TEST_CASE("length reward monotonicity, continuity and range") {
  for (std::size_t l_max : {1u, 2u, 7u, 1000u}) {
    for (bool normalize : {false, true}) {
      const LengthConfig cfg{l_max, normalize};
      const double scale = normalize ? 1.0 / static_cast<double>(l_max) : 1.0;
      double prev_correct = reward_length(0, true, cfg);
      double prev_wrong = reward_length(0, false, cfg);
      for (std::size_t l = 0; l <= 2 * l_max; ++l) {
        const double c = reward_length(l, true, cfg);
        const double w = reward_length(l, false, cfg);
        CHECK(c <= prev_correct);
        CHECK(w >= prev_wrong);
        CHECK(c <= 0.5 * static_cast<double>(l_max) * scale);
        CHECK(w >= -static_cast<double>(l_max) * scale);
        CHECK(w <= 0.0);
        prev_correct = c;
        prev_wrong = w;
      }
      CHECK(reward_length(l_max, true, cfg) == 0.0);
      CHECK(reward_length(l_max, false, cfg) == 0.0);
    }
  }
}

TEST_CASE("component examples") {
  const auto good = parse(fixtures::kOneUnitFake);
  CHECK(reward_accuracy(good, Verdict::Fake) == 1.0);
  CHECK(reward_accuracy(good, Verdict::Real) == 0.0);
  CHECK(reward_accuracy(parse("no verdict"), Verdict::Real) == 0.0);
  CHECK(reward_format(good) == 1.0);
  CHECK(reward_format(parse("<think>x</think>")) == 0.0);
  CHECK(reward_structure(good) == 1.0);
  CHECK(reward_structure(parse(fixtures::kUnidirectional)) == -1.0);
  CHECK(reward_structure(parse("<think></think><answer>Real</answer>")) == -1.0);

  FixedCritic c073(0.73), c14(1.4);
  MockCritic mock;
  CHECK(reward_logic("anything", c073) == 0.73);
  CHECK(reward_logic("anything", c14) == 1.0);
  CHECK(reward_logic("", mock) == 0.0);
  NanCritic nan;
  CHECK_THROWS_AS(reward_logic("x", nan), MalformedPayloadError);
}

TEST_CASE("critic failure policy") {
  DownCritic down;
  const auto parsed = parse(fixtures::kOneUnitFake);
  CHECK_THROWS_AS(reward_total(parsed, 300, Verdict::Fake, down, {}, {}), TransportError);
  const auto b = reward_total(parsed, 300, Verdict::Fake, down, {}, {}, CriticFailure::Substitute);
  CHECK(b.critic_degraded);
  CHECK(b.logic == 0.0);
  CHECK(b.total == 503.0);
}

TEST_CASE("invalid weights are rejected") {
  MockCritic mock;
  RewardWeights neg;
  neg.structure = -1;
  CHECK_THROWS_AS(reward_total(parse(""), 0, Verdict::Real, mock, neg, {}), std::invalid_argument);
  RewardWeights inf;
  inf.logic = INFINITY;
  CHECK_THROWS_AS(inf.validate(), std::invalid_argument);
}

TEST_CASE("determinism with the mock critic") {
  MockCritic a, b;
  for (const auto& f : fixtures::reward_fixtures()) {
    const auto p = parse(f.text);
    CHECK(reward_total(p, f.tokens, f.truth, a, f.weights, f.length) ==
          reward_total(p, f.tokens, f.truth, b, f.weights, f.length));
  }
}

TEST_CASE("breakdown serialization keys") {
  RewardBreakdown b{1, 1, -1, 0.5, 20, 21.5, false};
  const auto j = to_json(b);
  CHECK(j.at("r_acc") == 1.0);
  CHECK(j.at("r_struc") == -1.0);
  CHECK(j.at("r_logic") == 0.5);
  CHECK(j.at("r_len") == 20.0);
  CHECK(j.at("total") == 21.5);
  CHECK(j.at("critic_degraded") == false);
}
