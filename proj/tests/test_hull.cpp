#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "alignmarket/hull.hpp"
#include "alignmarket/optim.hpp"
#include "alignmarket/rng.hpp"
#include "doctest.h"

using namespace alignmarket;

namespace {

ScoreMatrix tiny_scores() {
  ScoreMatrix s;
  s.items = {"i0", "i1", "i2"};
  s.truth = {0.25, 0.5, 1.0};
  s.agent_names = {"a", "b"};
  s.scores = Matrix::from_rows({{0.2, 0.3}, {0.5, 0.55}, {0.9, 1.0}});
  s.validate();
  return s;
}

// Truth = fixed simplex mixture of agent columns; recoverable exactly.
ScoreMatrix planted_scores(int items, int agents, std::uint64_t seed,
                           std::vector<double>* weights_out = nullptr) {
  Rng rng(seed);
  std::vector<double> w(static_cast<std::size_t>(agents));
  double sum = 0.0;
  for (auto& x : w) {
    x = rng.uniform(0.05, 1.0);
    sum += x;
  }
  for (auto& x : w) x /= sum;
  ScoreMatrix s;
  s.scores = Matrix(static_cast<std::size_t>(items),
                    static_cast<std::size_t>(agents));
  for (int a = 0; a < agents; ++a) {
    s.agent_names.push_back("agent" + std::to_string(a));
    for (int i = 0; i < items; ++i)
      s.scores(static_cast<std::size_t>(i), static_cast<std::size_t>(a)) =
          rng.uniform(0.0, 1.0);
  }
  for (int i = 0; i < items; ++i) {
    s.items.push_back("item" + std::to_string(i));
    double t = 0.0;
    for (int a = 0; a < agents; ++a)
      t += w[static_cast<std::size_t>(a)] *
           s.scores(static_cast<std::size_t>(i), static_cast<std::size_t>(a));
    s.truth.push_back(t);
  }
  s.validate();
  if (weights_out) *weights_out = w;
  return s;
}

struct TempFile {
  std::string path;
  explicit TempFile(const char* name) {
    path = (std::filesystem::temp_directory_path() /
            (std::string("alignmarket_test_") + name + "_" +
             std::to_string(::getpid()) + ".csv"))
               .string();
  }
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("hull") {

TEST_CASE("score csv round-trip is textually stable") {
  const auto s = tiny_scores();
  const auto text = scores_to_csv(s);
  CHECK(text.rfind("#scale=", 0) == 0);
  CHECK(text.find("item,truth,a,b") != std::string::npos);
  const auto back = scores_from_csv(text);
  CHECK(back.items == s.items);
  CHECK(back.agent_names == s.agent_names);
  for (std::size_t i = 0; i < s.num_items(); ++i) {
    CHECK(back.truth[i] == s.truth[i]);
    for (std::size_t a = 0; a < s.num_agents(); ++a)
      CHECK(back.scores(i, a) == s.scores(i, a));
  }
  // Once through the canonical printer, the text is a fixpoint.
  CHECK(scores_to_csv(back) == text);
}

TEST_CASE("csv loader divides by the scale line") {
  const std::string text =
      "#scale=5\n"
      "item,truth,x,y\n"
      "i0,5,2.5,0\n"
      "i1,1,5,4\n";
  const auto s = scores_from_csv(text);
  CHECK(s.scale == doctest::Approx(5.0));
  CHECK(s.truth[0] == doctest::Approx(1.0));
  CHECK(s.truth[1] == doctest::Approx(0.2));
  CHECK(s.scores(0, 0) == doctest::Approx(0.5));
  CHECK(s.scores(1, 1) == doctest::Approx(0.8));
}

TEST_CASE("csv loader rejects malformed input") {
  CHECK_THROWS_AS(scores_from_csv(""), SchemaError);
  CHECK_THROWS_AS(scores_from_csv("item,truth,a\ni0,0.5,0.5\n"), SchemaError);
  CHECK_THROWS_AS(scores_from_csv("#scale=1\nitem,truth,a\ni0,0.5\n"),
                  SchemaError);
  CHECK_THROWS_AS(scores_from_csv("#scale=1\nitem,truth,a\ni0,zzz,0.5\n"),
                  SchemaError);
  CHECK_THROWS_AS(scores_from_csv("#scale=0\nitem,truth,a\ni0,0.5,0.5\n"),
                  SchemaError);
  // No agent columns at all.
  CHECK_THROWS_AS(scores_from_csv("#scale=1\nitem,truth\ni0,0.5\n"),
                  SchemaError);
}

TEST_CASE("score file save/load round-trip") {
  const auto s = tiny_scores();
  TempFile tmp("scores");
  save_scores(s, tmp.path);
  const auto back = load_scores(tmp.path);
  CHECK(scores_to_csv(back) == scores_to_csv(s));
  CHECK_THROWS_AS(load_scores(tmp.path + ".missing"), SchemaError);
}

TEST_CASE("generated agents stay in bounds and report their bias") {
  std::vector<double> truth(200);
  Rng rng(11);
  for (auto& t : truth) t = rng.uniform(0.0, 1.0);
  for (auto kind : {NoiseModel::Kind::kUniform, NoiseModel::Kind::kGaussian}) {
    const auto gen =
        generate_noisy_agents(truth, 7, NoiseModel{kind, 0.15}, 42);
    CHECK(gen.scores.num_agents() == 7);
    CHECK(gen.scores.num_items() == truth.size());
    REQUIRE(gen.realized_bias.size() == 7);
    for (std::size_t a = 0; a < 7; ++a) {
      double acc = 0.0;
      for (std::size_t i = 0; i < truth.size(); ++i) {
        const double v = gen.scores.scores(i, a);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        // Noise is bounded: uniform by the half-width, gaussian by 2 sigma
        // (clamping only shrinks the deviation).
        const double cap = kind == NoiseModel::Kind::kUniform ? 0.15 : 0.30;
        CHECK(std::abs(v - truth[i]) <= cap + 1e-12);
        acc += v - truth[i];
      }
      CHECK(gen.realized_bias[a] ==
            doctest::Approx(acc / static_cast<double>(truth.size()))
                .epsilon(1e-12));
      // Mean-zero noise on a mid-range truth: bias is small.
      CHECK(std::abs(gen.realized_bias[a]) < 0.05);
    }
  }
  // Same seed reproduces; different seed does not.
  const auto a = generate_noisy_agents(truth, 3, NoiseModel{}, 7);
  const auto b = generate_noisy_agents(truth, 3, NoiseModel{}, 7);
  const auto c = generate_noisy_agents(truth, 3, NoiseModel{}, 8);
  CHECK(a.scores.scores.data == b.scores.scores.data);
  CHECK(a.scores.scores.data != c.scores.scores.data);
  CHECK_THROWS_AS(
      generate_noisy_agents(truth, 3, NoiseModel{NoiseModel::Kind::kUniform, 0.0}, 1),
      DomainError);
  CHECK_THROWS_AS(generate_noisy_agents(truth, 0, NoiseModel{}, 1), DomainError);
}

TEST_CASE("planted mixture is recovered at full committee size") {
  std::vector<double> w;
  const auto s = planted_scores(120, 6, 3, &w);
  const auto fit = simplex_fit(s.scores, s.truth);
  CHECK(fit.mse <= 1e-12);
  for (std::size_t a = 0; a < 6; ++a)
    CHECK(fit.weights[a] == doctest::Approx(w[a]).epsilon(1e-5));
}

TEST_CASE("scaling experiment: shape, determinism, and nested-fit law") {
  const auto s = planted_scores(90, 5, 19);
  const std::vector<int> grid = {1, 2, 3, 5};
  const auto curve = k_scaling_experiment(s, grid, 8, 3, 51);
  CHECK(curve.k_grid == grid);
  CHECK(curve.permutations == 8);
  CHECK(curve.folds == 3);
  REQUIRE(curve.records.size() == grid.size());
  REQUIRE(curve.nnls_train_by_perm.size() == 8);
  for (std::size_t g = 0; g < grid.size(); ++g)
    CHECK(curve.records[g].k == grid[g]);

  // Adding agents to a nested prefix never hurts the training fit.
  for (const auto& per_k : curve.nnls_train_by_perm) {
    REQUIRE(per_k.size() == grid.size());
    for (std::size_t g = 1; g < per_k.size(); ++g)
      CHECK(per_k[g] <= per_k[g - 1] + 1e-10);
  }
  for (const auto& rec : curve.records) {
    // The fitted combination trains at least as well as either baseline.
    CHECK(rec.nnls_train_mse_mean <= rec.best_train_mse_mean + 1e-10);
    CHECK(rec.nnls_train_mse_mean <= rec.avg_train_mse_mean + 1e-10);
    CHECK(rec.simplex_train_mse_mean <= rec.avg_train_mse_mean + 1e-10);
    CHECK(rec.nnls_support_mean <= rec.k + 1e-12);
    CHECK(rec.simplex_support_mean <= rec.k + 1e-12);
    for (double v : {rec.best_mse_mean, rec.avg_mse_mean, rec.nnls_mse_mean,
                     rec.simplex_mse_mean})
      CHECK(v >= 0.0);
    for (double v : {rec.best_mse_std, rec.avg_mse_std, rec.nnls_mse_std,
                     rec.simplex_mse_std})
      CHECK(v >= 0.0);
  }
  // Zero-noise planted data: full committee held-out error is ~zero and
  // dominates the baselines.
  const auto& full = curve.records.back();
  CHECK(full.nnls_mse_mean <= 1e-10);
  CHECK(full.simplex_mse_mean <= 1e-10);
  CHECK(full.nnls_mse_mean <= full.best_mse_mean + 1e-12);

  const auto rerun = k_scaling_experiment(s, grid, 8, 3, 51);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(rerun.records[g].nnls_mse_mean == curve.records[g].nnls_mse_mean);
    CHECK(rerun.records[g].best_mse_std == curve.records[g].best_mse_std);
  }
}

TEST_CASE("scaling experiment rejects bad fold setups") {
  const auto s = tiny_scores();  // 3 items
  CHECK_THROWS_AS(k_scaling_experiment(s, {1}, 2, 1, 0), DomainError);
  CHECK_THROWS_AS(k_scaling_experiment(s, {1}, 2, 4, 0),
                  InsufficientItemsError);
  CHECK_THROWS_AS(k_scaling_experiment(s, {0}, 2, 2, 0), DomainError);
  CHECK_THROWS_AS(k_scaling_experiment(s, {3}, 2, 2, 0), DomainError);
  CHECK_THROWS_AS(k_scaling_experiment(s, {}, 2, 2, 0), DomainError);
}

TEST_CASE("committee size rule") {
  // ceil-strict form: smallest k with k > (ln(2AY) - ln delta) / (2 eps^2).
  CHECK(hoeffding_committee_size(3, 3, 0.1, 0.05) == 295);
  auto oracle = [](int na, int ny, double eps, double delta) {
    const double raw =
        (std::log(2.0 * na * ny) - std::log(delta)) / (2.0 * eps * eps);
    return static_cast<int>(std::floor(raw)) + 1;
  };
  for (int na : {2, 3, 7})
    for (int ny : {2, 5})
      for (double eps : {0.05, 0.1, 0.3})
        for (double delta : {0.01, 0.05, 0.2})
          CHECK(hoeffding_committee_size(na, ny, eps, delta) ==
                oracle(na, ny, eps, delta));
  // Tighter targets demand bigger committees.
  CHECK(hoeffding_committee_size(3, 3, 0.05, 0.05) >
        hoeffding_committee_size(3, 3, 0.1, 0.05));
  CHECK(hoeffding_committee_size(3, 3, 0.1, 0.01) >
        hoeffding_committee_size(3, 3, 0.1, 0.05));
  CHECK(hoeffding_committee_size(10, 10, 0.1, 0.05) >
        hoeffding_committee_size(3, 3, 0.1, 0.05));
  CHECK_THROWS_AS(hoeffding_committee_size(0, 3, 0.1, 0.05), DomainError);
  CHECK_THROWS_AS(hoeffding_committee_size(3, 3, 0.0, 0.05), DomainError);
  CHECK_THROWS_AS(hoeffding_committee_size(3, 3, 0.1, 0.0), DomainError);
  CHECK_THROWS_AS(hoeffding_committee_size(3, 3, 0.1, 1.0), DomainError);
}

TEST_CASE("monte carlo failure rate honors the rule's guarantee") {
  const double rate = validate_alignment_probability(3, 3, 0.1, 0.05, 400, 9);
  CHECK(rate >= 0.0);
  CHECK(rate <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / 400.0));
  CHECK(validate_alignment_probability(3, 3, 0.1, 0.05, 400, 9) == rate);
  // The rate is a fraction of the trial count.
  const double scaled = rate * 400.0;
  CHECK(scaled == doctest::Approx(std::round(scaled)).epsilon(1e-9));
  // Vanishing noise can never break the tolerance.
  CHECK(validate_alignment_probability(2, 2, 0.1, 0.05, 50, 3, 1e-6) == 0.0);
  CHECK_THROWS_AS(validate_alignment_probability(3, 3, 0.1, 0.05, 0, 1),
                  DomainError);
}

}  // TEST_SUITE
