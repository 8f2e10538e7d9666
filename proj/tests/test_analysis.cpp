#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dndt/analysis.hpp"
#include "dndt/errors.hpp"
#include "helpers.hpp"

using namespace dndt;
using dndt::testing::make_dataset;
using dndt::testing::random_model;

namespace {

double pair_count_tau(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  const std::size_t n = a.size();
  std::vector<std::size_t> pa(n), pb(n);
  for (std::size_t i = 0; i < n; ++i) {
    pa[a[i]] = i;
    pb[b[i]] = i;
  }
  long long concordant = 0, discordant = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool same = (pa[i] < pa[j]) == (pb[i] < pb[j]);
      (same ? concordant : discordant) += 1;
    }
  return (static_cast<double>(concordant) - static_cast<double>(discordant)) / static_cast<double>(n * (n - 1) / 2);
}

}  // namespace

TEST_CASE("kendall tau examples") {
  const std::vector<std::size_t> id = {0, 1, 2, 3};
  const std::vector<std::size_t> rev = {3, 2, 1, 0};
  const std::vector<std::size_t> one_swap = {0, 1, 3, 2};
  CHECK(kendall_tau(id, id) == 1.0);
  CHECK(kendall_tau(id, rev) == -1.0);
  CHECK(kendall_tau(id, one_swap) == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
  CHECK(kendall_tau(id, one_swap) == doctest::Approx(0.667).epsilon(1e-3));
  CHECK_THROWS_AS(kendall_tau(id, std::vector<std::size_t>{0, 1, 2}), ConfigError);
  CHECK_THROWS_AS(kendall_tau(id, std::vector<std::size_t>{0, 1, 1, 2}), ConfigError);
  CHECK_THROWS_AS(kendall_tau(std::vector<std::size_t>{0}, std::vector<std::size_t>{0}), ConfigError);
}

TEST_CASE("kendall tau matches pair counting") {
  std::mt19937_64 rng(31);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng() % 30;
    std::vector<std::size_t> a(n), b(n);
    std::iota(a.begin(), a.end(), std::size_t{0});
    std::iota(b.begin(), b.end(), std::size_t{0});
    std::shuffle(a.begin(), a.end(), rng);
    std::shuffle(b.begin(), b.end(), rng);
    const double tau = kendall_tau(a, b);
    CHECK(tau == pair_count_tau(a, b));
    CHECK(tau == kendall_tau(b, a));
    CHECK(tau >= -1.0);
    CHECK(tau <= 1.0);
  }
}

TEST_CASE("active cut points") {
  std::mt19937_64 rng(1);
  DndtModel m = random_model(rng, {2, 1}, 2, 0.1);
  m.binners[0].cutpoints = {-0.5, 0.5};  // first below the data
  m.binners[1].cutpoints = {1.5};         // past the data
  const Dataset d = make_dataset(2, {0.1, 0.2, 0.9, 0.4, 0.5, 0.6}, {0, 1, 0}, 2);
  const ActiveCutpoints a = active_cutpoints(m, d);
  CHECK(a.active == std::vector<std::size_t>{1, 0});
  CHECK(a.total == std::vector<std::size_t>{2, 1});
  CHECK(a.fraction[0] == 0.5);
  CHECK(a.overall_fraction() == doctest::Approx(1.0 / 3.0));
  CHECK(ignored_features(m, d) == std::vector<bool>{false, true});

  // Cut point at the median of a non-constant feature is active; one on
  // the minimum is not (nothing lies strictly below it).
  m.binners[1].cutpoints = {0.2};
  CHECK(active_cutpoints(m, d).active[1] == 0);
  m.binners[1].cutpoints = {0.4};
  CHECK(active_cutpoints(m, d).active[1] == 1);
  CHECK(ignored_features(m, d) == std::vector<bool>{false, false});

  CHECK_THROWS_AS(active_cutpoints(m, make_dataset(2, {}, {}, 2)), DataError);
}

TEST_CASE("active cut points agree with a brute-force scan") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.2, 1.2);
  for (int t = 0; t < 100; ++t) {
    DndtModel m = random_model(rng, {1 + rng() % 3, 1 + rng() % 3}, 2, 0.1);
    for (auto& b : m.binners)
      for (double& c : b.cutpoints) c = u(rng);
    std::vector<double> v;
    std::vector<std::size_t> y;
    for (int i = 0; i < 15; ++i) {
      v.push_back(std::round(u(rng) * 10) / 10);
      v.push_back(std::round(u(rng) * 10) / 10);
      y.push_back(i % 2);
    }
    const Dataset d = make_dataset(2, v, y, 2);
    const ActiveCutpoints a = active_cutpoints(m, d);
    for (std::size_t f = 0; f < 2; ++f) {
      std::size_t expected = 0;
      for (double c : prepare_cutpoints(m.binners[f].cutpoints)) {
        bool below = false, above = false;
        for (std::size_t i = 0; i < d.n_rows; ++i) {
          below |= hard_bin(d.at(i, f), std::vector<double>{c}) == 0;
          above |= hard_bin(d.at(i, f), std::vector<double>{c}) == 1;
        }
        expected += below && above;
      }
      CHECK(a.active[f] == expected);
      CHECK(ignored_features(a)[f] == (expected == 0));
    }
  }
}

TEST_CASE("dndt importance ranking and ties") {
  std::vector<RunResult> runs(4);
  const bool pattern[4][3] = {{true, false, false}, {true, false, true}, {true, false, false}, {true, false, true}};
  for (std::size_t r = 0; r < 4; ++r) runs[r].ignored = {pattern[r][0], pattern[r][1], pattern[r][2]};
  const DndtImportance imp = dndt_importance(runs, 3);
  CHECK(imp.ignore_rate == std::vector<double>{100.0, 0.0, 50.0});
  CHECK(imp.ranking == std::vector<std::size_t>{1, 2, 0});

  for (auto& r : runs) r.ignored = {false, false, false};
  CHECK(dndt_importance(runs, 3).ranking == std::vector<std::size_t>{0, 1, 2});
  CHECK(rank_descending(std::vector<double>{0.2, 0.5, 0.2, 0.1}) == std::vector<std::size_t>{1, 0, 2, 3});
}

TEST_CASE("repeated runs are reproducible and use distinct seeds") {
  const Dataset iris = load_bundled("iris").dataset;
  TrainConfig c;
  c.epochs = 10;
  c.seed = 3;
  RunProtocol p;
  p.n_runs = 3;
  const auto a = repeated_runs(iris, c, p);
  const auto b = repeated_runs(iris, c, p);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(a[r].seed == 3 + r);
    CHECK(a[r].test_accuracy == b[r].test_accuracy);
    CHECK(a[r].active.active == b[r].active.active);
  }
  // Sequential replay of one run.
  const SplitIndices s = stratified_split(iris, 0.8, 4);
  TrainConfig one = c;
  one.seed = 4;
  const FitResult f = fit(subset_rows(iris, s.train), one);
  const Dataset test = subset_rows(iris, s.test);
  CHECK(accuracy(predict_raw(test, f.model), test.labels) == a[1].test_accuracy);
}

TEST_CASE("report exports") {
  AnalysisReport r;
  r.feature_names = {"a", "b"};
  r.ignore_rate = {100.0, 0.0};
  r.dndt_ranking = {1, 0};
  r.cart_importance = {0.25, 0.75};
  r.cart_ranking = {1, 0};
  r.kendall_tau = 1.0;
  r.sweep = {{1, 0.5, 0.9, 0.8}};
  const std::string json = r.to_json();
  CHECK(json.find("\"kendall_tau\": 1.0") != std::string::npos);
  CHECK(json.find("\"ignore_rate_percent\"") != std::string::npos);
  const std::string csv = r.features_csv();
  CHECK(csv.find("0,a,,,,,100,2,0.25,2\n") != std::string::npos);
  CHECK(r.sweep_csv() == "cutpoints,mean_active_fraction,mean_train_acc,mean_test_acc\n1,0.5,0.9,0.8\n");
}
