#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "dialectic/grpo.hpp"

using namespace dialectic;

namespace {

Vector<double> arr(std::initializer_list<double> xs) {
  Vector<double> v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

// Long-double reference for standardized rewards.
std::vector<long double> oracle_advantages(const std::vector<double>& r, long double floor) {
  long double mean = 0;
  for (double x : r) mean += x;
  mean /= r.size();
  long double var = 0;
  for (double x : r) var += (x - mean) * (x - mean);
  var /= r.size();
  std::vector<long double> out;
  for (double x : r) out.push_back(var == 0 ? 0.0L : (x - mean) / (std::sqrt(var) + floor));
  return out;
}

GroupSample make_group(const Vector<double>& rewards, const Vector<double>& logp_old) {
  GroupSample g;
  g.prompt_id = "q";
  g.responses.resize(static_cast<std::size_t>(rewards.size()));
  g.rewards = rewards;
  g.logp_old = logp_old;
  return g;
}

}  // namespace

TEST_CASE("advantage examples") {
  const auto a = compute_advantages(arr({1, 2, 3}), 1e-12);
  CHECK(a[0] == doctest::Approx(-1.2247).epsilon(1e-4));
  CHECK(a[1] == doctest::Approx(0.0));
  CHECK(a[2] == doctest::Approx(1.2247).epsilon(1e-4));

  const auto c = compute_advantages(arr({5, 5, 5, 5}), 1e-4);
  for (Eigen::Index i = 0; i < 4; ++i) CHECK(c[i] == 0.0);

  const auto b = compute_advantages(arr({0, 1}), 1e-4);
  CHECK(b[0] == doctest::Approx(-0.5 / 0.5001).epsilon(1e-12));
  CHECK(b[1] == doctest::Approx(0.5 / 0.5001).epsilon(1e-12));

  CHECK_THROWS_AS(compute_advantages(arr({1}), 1e-4), std::invalid_argument);
  CHECK_THROWS_AS(compute_advantages(arr({1, 2}), 0.0), std::invalid_argument);
}

TEST_CASE("advantages: random groups agree with the long-double oracle and have zero mean") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> reward(-1000, 1000);
  const int sizes[] = {2, 4, 8, 16};
  for (int trial = 0; trial < 1000; ++trial) {
    const int g = sizes[pick(rng)];
    std::vector<double> r(static_cast<std::size_t>(g));
    const bool constant = trial % 10 == 0;
    for (auto& x : r) x = constant ? 3.25 : reward(rng);
    const auto adv = compute_advantages(Eigen::Map<const Vector<double>>(r.data(), g), 1e-4);
    const auto ref = oracle_advantages(r, 1e-4L);
    REQUIRE(adv.size() == g);
    for (int i = 0; i < g; ++i) CHECK(adv[i] == doctest::Approx(static_cast<double>(ref[i])).epsilon(1e-12));
    if (constant)
      CHECK((adv == 0.0).all());
    else
      CHECK(std::abs(adv.mean()) <= 1e-9);
  }
}

TEST_CASE("advantages: shift and scale response") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    Vector<double> r(8);
    for (auto& x : r) x = n(rng);
    if (population_std(r) < 1) continue;
    const auto base = compute_advantages(r, 1e-4);
    const auto shifted = compute_advantages((r + 123.5).eval(), 1e-4);
    CHECK(((shifted - base).abs() <= 1e-9).all());
    for (double k : {0.5, 3.0, 40.0}) {
      const auto scaled = compute_advantages((r * k).eval(), 1e-4);
      CHECK((((scaled - base).abs() / base.abs().max(1e-12)) < 1e-3).all());
      const auto exact_a = compute_advantages(r, 1e-15);
      const auto exact_b = compute_advantages((r * k).eval(), 1e-15);
      CHECK(((exact_a - exact_b).abs() <= 1e-9).all());
    }
  }
}

TEST_CASE("probability ratio") {
  CHECK(prob_ratio(-2.0, -2.0) == 1.0);
  CHECK(prob_ratio(std::log(0.3), std::log(0.2)) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(prob_ratio(std::log(0.1), std::log(0.4)) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(prob_ratio<double>(NAN, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(prob_ratio<double>(0.0, -INFINITY), std::invalid_argument);
}

TEST_CASE("clipped term") {
  for (double a : {-3.0, -0.1, 0.0, 2.5}) CHECK(clipped_term(1.0, a, 0.2) == a);
  CHECK(clipped_term(1.5, 1.0, 0.2) == doctest::Approx(1.2));
  CHECK(clipped_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
  CHECK(clipped_term(0.5, 1.0, 0.2) == 0.5);
  CHECK(clipped_term(1.5, -1.0, 0.2) == -1.5);
}

TEST_CASE("clipping pessimism and plateau") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ratio(0.01, 5.0), adv(-5, 5), eps(0.01, 0.9);
  for (int i = 0; i < 10000; ++i) {
    const double r = ratio(rng), a = adv(rng), e = eps(rng);
    CHECK(clipped_term(r, a, e) <= r * a);
  }
  for (int i = 0; i < 1000; ++i) {
    const double e = eps(rng);
    const double a = std::abs(adv(rng)) + 1e-3;
    const double r = 1 + e + 1e-6 + ratio(rng);
    CHECK(clipped_term(r, a, e) == clipped_term(r + 1e-3, a, e));
    CHECK(clipped_term_dlog(r, a, e) == 0.0);
  }
}

TEST_CASE("group objective") {
  GrpoConfig cfg;
  SUBCASE("identical policies give the mean advantage, zero") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    for (int t = 0; t < 100; ++t) {
      Vector<double> r(8), lp(8);
      for (auto& x : r) x = n(rng) * 50;
      for (auto& x : lp) x = -std::abs(n(rng)) * 20;
      CHECK(std::abs(group_objective(make_group(r, lp), lp, cfg)) <= 1e-9);
    }
  }
  SUBCASE("two-response example") {
    cfg.std_floor = 1e-15;
    const auto g = make_group(arr({0, 1}), arr({-1, -2}));
    CHECK(group_objective(g, arr({-1, -2}), cfg) == doctest::Approx(0.0));
  }
  SUBCASE("kl off is bit-identical to the bare clipped mean") {
    const auto g = make_group(arr({0, 1, 4, 2}), arr({-1, -2, -3, -4}));
    const auto lp = arr({-0.5, -2.5, -2.9, -4.4});
    const auto adv = compute_advantages(g.rewards, cfg.std_floor);
    double sum = 0;
    for (Eigen::Index i = 0; i < 4; ++i) sum += clipped_term(prob_ratio(lp[i], g.logp_old[i]), adv[i], cfg.clip_eps);
    CHECK(group_objective(g, lp, cfg) == sum / 4.0);
    GrpoConfig kl = cfg;
    kl.kl_coeff = 0.5;
    CHECK(group_objective(g, lp, kl) < group_objective(g, lp, cfg));
  }
  SUBCASE("length mismatch") {
    const auto g = make_group(arr({0, 1}), arr({-1, -2}));
    CHECK_THROWS_AS(group_objective(g, arr({-1, -2, -3}), cfg), std::invalid_argument);
  }
}

TEST_CASE("group objective gradient matches finite differences") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  for (double kl : {0.0, 0.3}) {
    GrpoConfig cfg;
    cfg.kl_coeff = kl;
    for (int t = 0; t < 50; ++t) {
      Vector<double> r(6), old(6), lp(6);
      for (auto& x : r) x = n(rng);
      for (auto& x : old) x = -std::abs(n(rng)) * 3;
      for (Eigen::Index i = 0; i < 6; ++i) lp[i] = old[i] + 0.3 * n(rng);
      const auto g = make_group(r, old);
      const auto grad = group_objective_grad(g, lp, cfg);
      for (Eigen::Index i = 0; i < 6; ++i) {
        const double ratio = std::exp(lp[i] - old[i]);
        // stay away from the clip kinks
        if (std::abs(ratio - (1 - cfg.clip_eps)) < 1e-3 || std::abs(ratio - (1 + cfg.clip_eps)) < 1e-3) continue;
        Vector<double> up = lp, down = lp;
        up[i] += 1e-6;
        down[i] -= 1e-6;
        const double fd = (group_objective(g, up, cfg) - group_objective(g, down, cfg)) / 2e-6;
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
      }
    }
  }
}

TEST_CASE("config validation") {
  GrpoConfig c;
  CHECK_NOTHROW(c.validate());
  c.group_size = 1;
  CHECK_THROWS(c.validate());
  c = {};
  c.clip_eps = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.std_floor = -1;
  CHECK_THROWS(c.validate());
  c = {};
  c.kl_coeff = -0.1;
  CHECK_THROWS(c.validate());
}
