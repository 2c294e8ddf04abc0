#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "cmrl/density.hpp"
#include "cmrl/error.hpp"
#include "cmrl/sim.hpp"
#include "support.hpp"

namespace cmrl {
namespace {

using testing::scalar_dataset;

// A one-step episode gives exactly one (l, t) sample: its first value.
Dataset single_samples(const std::vector<double>& xs, double lo = -10, double hi = 10) {
  std::vector<std::vector<double>> rows;
  for (double x : xs) rows.push_back({x, x});
  return scalar_dataset(rows, lo, hi);
}

const std::vector<Variable> kX{Variable::attribute(0, 0)};

TEST(Kde, SampleAtQueryGivesOne) {
  const double q[] = {0.3};
  EXPECT_DOUBLE_EQ(kde_density(single_samples({0.3}), kX, q, {}), 1.0);
}

TEST(Kde, UnitDistanceGivesInverseE) {
  const double q[] = {1.3};
  EXPECT_NEAR(kde_density(single_samples({0.3}), kX, q, {}), std::exp(-1.0), 1e-15);
}

TEST(Kde, TwoSamplesBothAtUnitDistance) {
  const double q[] = {1.0};
  const double oracle = (std::exp(-1.0) + std::exp(-1.0)) / 2.0;
  EXPECT_NEAR(kde_density(single_samples({0.0, 2.0}), kX, q, {}), oracle, 1e-15);
}

TEST(Kde, MatchesDirectSummationOverJointVariables) {
  AttributeSchema s;
  s.attributes = {testing::real_attr("p", {0, 0}, {5, 5}), testing::real_attr("r", {0}, {1})};
  s.action_count = 3;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  std::vector<Episode> eps(4);
  for (auto& ep : eps)
    for (int t = 0; t < 6; ++t) ep.push_back(Step{{{u(rng), u(rng)}, {u(rng) / 5.0}}, int(rng() % 3)});
  const Dataset d = testing::make_dataset(s, eps);
  const std::vector<Variable> vars{Variable::attribute(1, 1), Variable::attribute(0, 0), Variable::action()};
  const std::vector<double> q{0.4, 2.0, 3.0, 1.0};
  const KernelConfig k{0.7, 1.3};

  double sum = 0.0;
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t t = 0; t < 5; ++t) {
      const auto& now = eps[l][t];
      const auto& nxt = eps[l][t + 1];
      const double dist = std::abs(q[0] - nxt.obs[1][0]) + std::hypot(q[1] - now.obs[0][0], q[2] - now.obs[0][1]) +
                          std::abs(q[3] - now.action);
      sum += std::exp(-k.w * dist);
    }
  EXPECT_NEAR(kde_density(d, vars, q, k), k.alpha * k.w * sum / 20.0, 1e-14);
}

TEST(Kde, PermutationInvariant) {
  std::vector<double> xs{0.1, -2.0, 3.5, 4.4, -7.0};
  const double q[] = {0.9};
  const double a = kde_density(single_samples(xs), kX, q, {0.8, 1.0});
  std::reverse(xs.begin(), xs.end());
  std::rotate(xs.begin(), xs.begin() + 2, xs.end());
  EXPECT_NEAR(kde_density(single_samples(xs), kX, q, {0.8, 1.0}), a, 1e-15);
}

TEST(Kde, IsometryInvariant) {
  AttributeSchema s;
  s.attributes = {testing::real_attr("p", {-20, -20}, {20, 20})};
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<std::array<double, 2>> pts(30);
  for (auto& p : pts) p = {u(rng), u(rng)};
  const double th = 0.7, tx = 3.0, ty = -1.5;
  auto move = [&](std::array<double, 2> p) {
    return std::array<double, 2>{std::cos(th) * p[0] - std::sin(th) * p[1] + tx,
                                 std::sin(th) * p[0] + std::cos(th) * p[1] + ty};
  };
  std::vector<Episode> a, b;
  for (const auto& p : pts) {
    const auto m = move(p);
    a.push_back({Step{{{p[0], p[1]}}, 0}, Step{{{p[0], p[1]}}, 0}});
    b.push_back({Step{{{m[0], m[1]}}, 0}, Step{{{m[0], m[1]}}, 0}});
  }
  const std::array<double, 2> q{0.5, 1.0};
  const auto mq = move(q);
  EXPECT_NEAR(kde_density(testing::make_dataset(s, a), kX, q, {}),
              kde_density(testing::make_dataset(s, b), kX, mq, {}), 1e-13);
}

TEST(Kde, DoubledDistancesWithHalvedRate) {
  const std::vector<double> xs{0.1, -2.0, 3.5, 4.4};
  std::vector<double> doubled;
  for (double x : xs) doubled.push_back(2 * x);
  const double q[] = {0.9}, q2[] = {1.8};
  const double a = kde_density(single_samples(xs), kX, q, {1.0, 1.0});
  const double b = kde_density(single_samples(doubled), kX, q2, {0.5, 2.0});
  EXPECT_NEAR(a, b, 1e-15);
}

TEST(Kde, Errors) {
  const double q2[] = {0.0, 1.0};
  EXPECT_THROW(kde_density(single_samples({0.0}), kX, q2, {}), DimensionMismatch);
  Dataset empty = single_samples({0.0});
  empty.episodes.clear();
  const double q[] = {0.0};
  EXPECT_THROW(kde_density(empty, kX, q, {}), EmptyDataset);
}

TEST(Pmf, CountsGiveMasses) {
  const Dataset d = scalar_dataset({{0, 0, 0, 1, 0}}, 0, 1, AttributeKind::integer_grid);
  const auto g = GridSpec::defaults(d.schema);
  const Pmf p = empirical_pmf(d, kX, g);
  const std::size_t zero[] = {0}, one[] = {1};
  EXPECT_DOUBLE_EQ(p.mass(zero), 0.75);
  EXPECT_DOUBLE_EQ(p.mass(one), 0.25);
}

TEST(Pmf, HalfEventWeightsGiveHalf) {
  const Dataset d = testing::latch_dataset(7, 12, 4);
  const auto g = GridSpec::defaults(d.schema);
  const std::vector<double> m(7 * 12, 0.5);
  const std::vector<Variable> vars{Variable::attribute(0, 0), Variable::event()};
  const Pmf p = empirical_pmf(d, vars, g, {}, m);
  const std::size_t keep[] = {1};
  const Pmf e = p.marginal(keep);
  const std::size_t one[] = {1};
  EXPECT_NEAR(e.mass(one), 0.5, 1e-12);
  EXPECT_NEAR(p.total(), 1.0, 1e-9);
}

TEST(Pmf, PaintingCountingOracle) {
  const Dataset d = collect_random(LatchEnv{PaintingConfig{}}, 10, 21);
  const auto g = GridSpec::defaults(d.schema);
  const std::vector<Variable> vars{Variable::attribute(1, 1), Variable::attribute(0, 0), Variable::action()};
  const Pmf p = empirical_pmf(d, vars, g);

  std::map<std::uint64_t, double> oracle;
  for (const auto& ep : d.episodes)
    for (std::size_t t = 0; t + 1 < ep.size(); ++t) {
      const auto& c = ep[t].obs[0];
      const auto cell = static_cast<std::uint64_t>(c[0] * 25 + c[1] * 5 + c[2]);
      const auto r = static_cast<std::uint64_t>(ep[t + 1].obs[1][0]);
      oracle[(r * 125 + cell) * 6 + static_cast<std::uint64_t>(ep[t].action)] += 1.0 / 1000.0;
    }
  ASSERT_EQ(p.table().size(), oracle.size());
  for (const auto& [k, m] : oracle) EXPECT_NEAR(p.table().at(k), m, 1e-12) << k;
}

TEST(Pmf, ZeroWeightEpisodeIsLikeRemovingIt) {
  const Dataset d = testing::latch_dataset(6, 10, 8);
  const auto g = GridSpec::defaults(d.schema);
  const std::vector<Variable> vars{Variable::attribute(1, 1), Variable::attribute(0, 0), Variable::action()};
  std::vector<double> w(60, 1.0);
  std::fill(w.begin() + 20, w.begin() + 30, 0.0);
  Dataset removed = d;
  removed.episodes.erase(removed.episodes.begin() + 2);
  const Pmf a = empirical_pmf(d, vars, g, w);
  const Pmf b = empirical_pmf(removed, vars, g);
  ASSERT_EQ(a.table().size(), b.table().size());
  for (const auto& [k, m] : b.table()) EXPECT_NEAR(a.table().at(k), m, 1e-15);
}

TEST(Pmf, NormalizedUnderRandomWeights) {
  const Dataset d = testing::latch_dataset(20, 30, 1);
  const auto g = GridSpec::defaults(d.schema);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w(600), m(600);
    for (auto& x : w) x = u(rng);
    for (auto& x : m) x = u(rng);
    const std::vector<Variable> vars{Variable::attribute(1, 1), Variable::attribute(0, 0), Variable::event()};
    EXPECT_NEAR(empirical_pmf(d, vars, g, w, m).total(), 1.0, 1e-9);
  }
}

TEST(Pmf, Errors) {
  const Dataset d = testing::latch_dataset(2, 3, 1);
  const auto g = GridSpec::defaults(d.schema);
  EXPECT_THROW(empirical_pmf(d, kX, g, std::vector<double>(6, 0.0)), AllZeroWeights);
  EXPECT_THROW(empirical_pmf(d, kX, g, std::vector<double>(5, 1.0)), DimensionMismatch);
  Dataset empty = d;
  empty.episodes.clear();
  EXPECT_THROW(empirical_pmf(empty, kX, g), EmptyDataset);
}

TEST(Pmf, MarginalAndDecode) {
  const Pmf p({Variable::attribute(0, 0), Variable::action()}, {3, 2}, {{0, 0.25}, {3, 0.25}, {5, 0.5}});
  EXPECT_EQ(p.decode(5), (std::vector<std::size_t>{2, 1}));
  const std::size_t keep[] = {1};
  const Pmf a = p.marginal(keep);
  const std::size_t zero[] = {0}, one[] = {1};
  EXPECT_DOUBLE_EQ(a.mass(zero), 0.25);
  EXPECT_DOUBLE_EQ(a.mass(one), 0.75);
  EXPECT_THROW(Pmf({Variable::action()}, {2}, {{0, -0.1}}), MalformedPmf);
}

TEST(GridSpec, IntegerCellsAndCenters) {
  const Dataset d = collect_random(LatchEnv{PaintingConfig{}}, 1, 1);
  const auto g = GridSpec::defaults(d.schema);
  EXPECT_EQ(g.bin_count(0), 125u);
  const double v[] = {1, 2, 3};
  EXPECT_EQ(g.bin(0, v), 1u * 25 + 2 * 5 + 3);
  EXPECT_EQ(g.bin_center(0, 38), (std::vector<double>{1, 2, 3}));
  EXPECT_NO_THROW(validate_grid(g, d.schema));
}

TEST(SampleCenter, DegenerateMixtureCollapses) {
  const Dataset d = scalar_dataset({{2.5, 2.5, 2.5}, {2.5, 2.5, 2.5}}, 0, 5);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) EXPECT_NEAR(sample_center(d, 0, {1e9, 1.0}, rng)[0], 2.5, 1e-6);
}

TEST(SampleCenter, SameSeedSameDraw) {
  const Dataset d = testing::latch_dataset(5, 10, 3);
  std::mt19937_64 a(77), b(77);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_center(d, 0, {}, a), sample_center(d, 0, {}, b));
}

TEST(SampleCenter, ClusterFrequenciesFollowMixtureWeights) {
  std::vector<std::vector<double>> rows;
  for (int l = 0; l < 10; ++l) rows.push_back(std::vector<double>(8, l < 3 ? 0.0 : 100.0));
  const Dataset d = scalar_dataset(rows, -10, 110);
  std::mt19937_64 rng(2024);
  const int n = 10000;
  int low = 0;
  for (int i = 0; i < n; ++i) low += sample_center(d, 0, {1.0, 1.0}, rng)[0] < 50.0;
  const double p = 0.3, sigma = std::sqrt(n * p * (1 - p));
  EXPECT_NEAR(low, n * p, 3 * sigma);
}

TEST(SampleCenter, StaysInTheBox) {
  const Dataset d = collect_random(LatchEnv{PaintingConfig{}}, 5, 2);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 2000; ++i) {
    const auto c = sample_center(d, 0, {0.2, 1.0}, rng);
    for (double v : c) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 4.0);
    }
  }
}

}  // namespace
}  // namespace cmrl
