#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "alignmarket/dialogue.hpp"
#include "doctest.h"

using namespace alignmarket;

namespace {

// --- independent exhaustive-conditioning oracle ---------------------------
//
// Replays the deterministic protocol by simulating every hypothetical
// feature value: a listener keeps the candidates whose would-be report
// coincides with what was actually said, and beliefs are direct conditional
// expectations over the surviving candidate set.

std::vector<double> cond_belief(const DiscreteJointPrior& pr, int speaker,
                                std::size_t own,
                                const std::set<std::size_t>& other) {
  std::vector<double> ymass(pr.num_y(), 0.0);
  double total = 0.0;
  for (std::size_t o : other)
    for (std::size_t y = 0; y < pr.num_y(); ++y) {
      const double m = speaker == 0 ? pr.p(own, o, y) : pr.p(o, own, y);
      ymass[y] += m;
      total += m;
    }
  if (total <= 0.0) return {};
  std::vector<double> b(pr.num_actions(), 0.0);
  for (std::size_t y = 0; y < pr.num_y(); ++y)
    for (std::size_t a = 0; a < pr.num_actions(); ++a)
      b[a] += ymass[y] / total * pr.alice_utility(y, a);
  return b;
}

bool close_msg(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) return false;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (std::abs(u[i] - v[i]) > 1e-12) return false;
  return true;
}

struct OracleRun {
  std::vector<std::vector<double>> alice, bob;  // index 0 = pre-conversation
};

OracleRun oracle_conversation(const DiscreteJointPrior& pr, std::size_t xa,
                              std::size_t xb, int rounds) {
  std::set<std::size_t> cand_a, cand_b;
  for (std::size_t i = 0; i < pr.num_x_a(); ++i) cand_a.insert(i);
  for (std::size_t i = 0; i < pr.num_x_b(); ++i) cand_b.insert(i);
  OracleRun run;
  run.alice.push_back(cond_belief(pr, 0, xa, cand_b));
  run.bob.push_back(cond_belief(pr, 1, xb, cand_a));
  for (int r = 1; r <= rounds; ++r) {
    const auto said_a = cond_belief(pr, 0, xa, cand_b);
    std::set<std::size_t> keep;
    for (std::size_t c : cand_a) {
      const auto would = cond_belief(pr, 0, c, cand_b);
      if (!would.empty() && close_msg(would, said_a)) keep.insert(c);
    }
    cand_a = keep;
    const auto said_b = cond_belief(pr, 1, xb, cand_a);
    keep.clear();
    for (std::size_t c : cand_b) {
      const auto would = cond_belief(pr, 1, c, cand_a);
      if (!would.empty() && close_msg(would, said_b)) keep.insert(c);
    }
    cand_b = keep;
    run.alice.push_back(cond_belief(pr, 0, xa, cand_b));
    run.bob.push_back(said_b);
  }
  return run;
}

double pair_mass(const DiscreteJointPrior& pr, std::size_t xa, std::size_t xb) {
  double m = 0.0;
  for (std::size_t y = 0; y < pr.num_y(); ++y) m += pr.p(xa, xb, y);
  return m;
}

std::vector<double> full_info_belief(const DiscreteJointPrior& pr,
                                     std::size_t xa, std::size_t xb) {
  return cond_belief(pr, 0, xa, {xb});
}

double sup_dist(const std::vector<double>& u, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    s = std::max(s, std::abs(u[i] - v[i]));
  return s;
}

DiscreteJointPrior prior_with_dead_pair() {
  DiscreteJointPrior p;
  p.x_a_labels = {"a0", "a1"};
  p.x_b_labels = {"b0", "b1"};
  p.y_labels = {"y0", "y1"};
  // (a0, b1) never happens.
  p.pmf = {0.2, 0.1, 0.0, 0.0, 0.15, 0.15, 0.2, 0.2};
  p.alice_utility = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  p.validate();
  return p;
}

}  // namespace

TEST_SUITE("dialogue") {

TEST_CASE("fixture catalog and json round-trip") {
  const auto names = joint_prior_fixture_names();
  REQUIRE(names == std::vector<std::string>{"corr2", "xor2", "pool3", "skew3"});
  for (const auto& n : names) {
    const auto p = joint_prior_fixture(n);
    p.validate();
    double mass = 0.0;
    for (double v : p.pmf) mass += v;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    const auto text = joint_prior_to_json(p);
    const auto back = joint_prior_from_json(text);
    CHECK(back.pmf == p.pmf);
    CHECK(back.x_a_labels == p.x_a_labels);
    CHECK(joint_prior_to_json(back) == text);
  }
  CHECK(joint_prior_fixture("corr2").num_x_a() == 2);
  CHECK(joint_prior_fixture("pool3").num_x_a() == 3);
  CHECK(joint_prior_fixture("skew3").num_y() == 2);
  CHECK_THROWS_AS(joint_prior_fixture("nope"), DomainError);
}

TEST_CASE("conversation beliefs match the exhaustive-conditioning oracle") {
  for (const auto& name : joint_prior_fixture_names()) {
    const auto pr = joint_prior_fixture(name);
    const int rounds =
        static_cast<int>(pr.num_x_a() + pr.num_x_b()) + 2;
    for (std::size_t xa = 0; xa < pr.num_x_a(); ++xa)
      for (std::size_t xb = 0; xb < pr.num_x_b(); ++xb) {
        if (pair_mass(pr, xa, xb) <= 0.0) continue;
        const auto res = run_straightforward_conversation(
            pr, static_cast<int>(xa), static_cast<int>(xb), rounds);
        const auto orc = oracle_conversation(pr, xa, xb, rounds);
        REQUIRE(res.alice_beliefs.size() ==
                static_cast<std::size_t>(rounds) + 1);
        REQUIRE(res.bob_beliefs.size() == res.alice_beliefs.size());
        for (int r = 0; r <= rounds; ++r) {
          const auto ri = static_cast<std::size_t>(r);
          REQUIRE(!res.alice_beliefs[ri].empty());
          CHECK(sup_dist(res.alice_beliefs[ri], orc.alice[ri]) <= 1e-9);
          CHECK(sup_dist(res.bob_beliefs[ri], orc.bob[ri]) <= 1e-9);
        }
      }
  }
}

TEST_CASE("beliefs are martingales under the joint prior") {
  for (const auto& name : joint_prior_fixture_names()) {
    const auto pr = joint_prior_fixture(name);
    const int rounds = 4;
    std::vector<double> prior_mean(pr.num_actions(), 0.0);
    for (std::size_t xa = 0; xa < pr.num_x_a(); ++xa)
      for (std::size_t xb = 0; xb < pr.num_x_b(); ++xb)
        for (std::size_t y = 0; y < pr.num_y(); ++y)
          for (std::size_t a = 0; a < pr.num_actions(); ++a)
            prior_mean[a] += pr.p(xa, xb, y) * pr.alice_utility(y, a);
    for (int r = 0; r <= rounds; ++r) {
      std::vector<double> mix_a(pr.num_actions(), 0.0),
          mix_b(pr.num_actions(), 0.0);
      for (std::size_t xa = 0; xa < pr.num_x_a(); ++xa)
        for (std::size_t xb = 0; xb < pr.num_x_b(); ++xb) {
          const double m = pair_mass(pr, xa, xb);
          if (m <= 0.0) continue;
          const auto res = run_straightforward_conversation(
              pr, static_cast<int>(xa), static_cast<int>(xb), r);
          for (std::size_t a = 0; a < pr.num_actions(); ++a) {
            mix_a[a] += m * res.alice_beliefs.back()[a];
            mix_b[a] += m * res.bob_beliefs.back()[a];
          }
        }
      for (std::size_t a = 0; a < pr.num_actions(); ++a) {
        CHECK(mix_a[a] == doctest::Approx(prior_mean[a]).epsilon(1e-9));
        CHECK(mix_b[a] == doctest::Approx(prior_mean[a]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("conversations reach a fixpoint where both parties agree") {
  for (const auto& name : joint_prior_fixture_names()) {
    const auto pr = joint_prior_fixture(name);
    const int cap = static_cast<int>(pr.num_x_a() + pr.num_x_b());
    for (std::size_t xa = 0; xa < pr.num_x_a(); ++xa)
      for (std::size_t xb = 0; xb < pr.num_x_b(); ++xb) {
        if (pair_mass(pr, xa, xb) <= 0.0) continue;
        const auto res = run_straightforward_conversation(
            pr, static_cast<int>(xa), static_cast<int>(xb), cap + 2);
        // Candidate sets only shrink, so the tail is constant...
        CHECK(sup_dist(res.alice_beliefs[static_cast<std::size_t>(cap)],
                       res.alice_beliefs.back()) <= 1e-12);
        // ...and at the fixpoint every surviving candidate says the same
        // thing, which forces the two reports together.
        CHECK(sup_dist(res.alice_beliefs.back(), res.bob_beliefs.back()) <=
              1e-9);
        CHECK(agreement_round(res, 1e-9) >= 0);
      }
  }
}

TEST_CASE("independent reads of a binary state reveal everything in one"
          " round") {
  const auto pr = joint_prior_fixture("corr2");
  const auto res = run_straightforward_conversation(pr, 0, 0, 2);
  CHECK(res.alice_beliefs[0][0] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(res.bob_beliefs[0][0] == doctest::Approx(0.7).epsilon(1e-12));
  // P(y0 | both low reads) = 0.28 / 0.31.
  const double post = 28.0 / 31.0;
  CHECK(res.alice_beliefs[1][0] == doctest::Approx(post).epsilon(1e-12));
  CHECK(res.bob_beliefs[1][0] == doctest::Approx(post).epsilon(1e-12));
  CHECK(agreement_round(res, 1e-9) == 1);
  // Too few rounds for agreement at a tight threshold.
  const auto stub = run_straightforward_conversation(pr, 0, 0, 0);
  CHECK(agreement_round(stub, 0.01) == -1);
  CHECK_THROWS_AS(agreement_round(stub, -0.1), DomainError);
}

TEST_CASE("parity features are pure complements: talk reveals nothing") {
  const auto pr = joint_prior_fixture("xor2");
  for (std::size_t xa = 0; xa < 2; ++xa)
    for (std::size_t xb = 0; xb < 2; ++xb) {
      const auto res = run_straightforward_conversation(
          pr, static_cast<int>(xa), static_cast<int>(xb), 6);
      for (const auto& b : res.alice_beliefs) {
        CHECK(b[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(b[1] == doctest::Approx(0.5).epsilon(1e-12));
      }
      // Pooled talk never recovers what joint knowledge would give.
      const auto full = full_info_belief(pr, xa, xb);
      CHECK(sup_dist(res.alice_beliefs.back(), full) ==
            doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("substitutes fixtures end at full-information beliefs") {
  for (const char* name : {"corr2", "pool3"}) {
    const auto pr = joint_prior_fixture(name);
    const int cap = static_cast<int>(pr.num_x_a() + pr.num_x_b());
    for (std::size_t xa = 0; xa < pr.num_x_a(); ++xa)
      for (std::size_t xb = 0; xb < pr.num_x_b(); ++xb) {
        if (pair_mass(pr, xa, xb) <= 0.0) continue;
        const auto res = run_straightforward_conversation(
            pr, static_cast<int>(xa), static_cast<int>(xb), cap);
        const auto full = full_info_belief(pr, xa, xb);
        CHECK(sup_dist(res.alice_beliefs.back(), full) <= 1e-9);
        CHECK(sup_dist(res.bob_beliefs.back(), full) <= 1e-9);
      }
  }
}

TEST_CASE("conversation input validation") {
  const auto pr = joint_prior_fixture("corr2");
  CHECK_THROWS_AS(run_straightforward_conversation(pr, 2, 0, 1), DomainError);
  CHECK_THROWS_AS(run_straightforward_conversation(pr, 0, -1, 1), DomainError);
  CHECK_THROWS_AS(run_straightforward_conversation(pr, 0, 0, -1), DomainError);
  const auto dead = prior_with_dead_pair();
  CHECK_THROWS_AS(run_straightforward_conversation(dead, 0, 1, 1),
                  ZeroProbabilityFeaturesError);
  run_straightforward_conversation(dead, 0, 0, 3);  // positive pair is fine
}

TEST_CASE("quantal response basics") {
  const std::vector<double> u = {0.3, 0.9, 0.1};
  const auto uniform = quantal_response(u, 0.0);
  for (double p : uniform) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
  const auto q = quantal_response(u, 3.0);
  double sum = 0.0;
  for (double p : q) {
    CHECK(p > 0.0);
    sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q[1] > q[0]);
  CHECK(q[0] > q[2]);
  // Exact softmax value for a hand case.
  const double z = std::exp(3.0 * 0.3) + std::exp(3.0 * 0.9) + std::exp(0.3);
  CHECK(q[1] == doctest::Approx(std::exp(2.7) / z).epsilon(1e-12));
  // Shift invariance (max subtraction) and sharp-limit concentration.
  const auto shifted = quantal_response({100.3, 100.9, 100.1}, 3.0);
  for (std::size_t i = 0; i < q.size(); ++i)
    CHECK(shifted[i] == doctest::Approx(q[i]).epsilon(1e-12));
  CHECK(quantal_response(u, 1e5)[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(quantal_response({}, 1.0), DomainError);
  CHECK_THROWS_AS(quantal_response(u, -1.0), DomainError);
}

TEST_CASE("quantal gap is bounded by log |A| / lambda") {
  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 3));
    std::vector<double> u(static_cast<std::size_t>(n));
    for (auto& v : u) v = rng.uniform(-2.0, 2.0);
    const double lambda = rng.uniform(0.05, 8.0);
    const double gap = quantal_gap(u, lambda);
    CHECK(gap >= -1e-12);
    CHECK(gap <= std::log(static_cast<double>(n)) / lambda + 1e-12);
  }
  // lambda = 0 plays uniformly: the gap is max - mean.
  const double g0 = quantal_gap({1.0, 0.0}, 0.0);
  CHECK(g0 == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax stability against the smoothness bound") {
  Rng rng(23);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 3));
    std::vector<double> u(static_cast<std::size_t>(n)),
        v(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] = rng.uniform(-1.0, 1.0);
      v[i] = u[i] + rng.uniform(-0.4, 0.4);
    }
    const double lambda = rng.uniform(0.05, 5.0);
    const auto rep = softmax_stability(u, v, lambda);
    double sup = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
      sup = std::max(sup, std::abs(u[i] - v[i]));
    CHECK(rep.sup_distance == doctest::Approx(sup).epsilon(1e-12));
    CHECK(rep.bound ==
          doctest::Approx(std::expm1(2.0 * lambda * sup)).epsilon(1e-12));
    CHECK(rep.l1_distance >= 0.0);
    CHECK(rep.l1_distance <= rep.bound + 1e-12);
  }
  const auto same = softmax_stability({0.1, 0.7}, {0.1, 0.7}, 2.0);
  CHECK(same.l1_distance == 0.0);
  CHECK(same.bound == 0.0);
  CHECK_THROWS_AS(softmax_stability({0.1}, {0.1, 0.2}, 1.0), DimensionError);
}

TEST_CASE("diminishing-value check across the fixtures") {
  const auto corr = info_substitutes_check(joint_prior_fixture("corr2"));
  CHECK(corr.holds);
  CHECK(corr.pairs_checked == 9);
  CHECK(corr.max_violation <= 1e-9);
  const auto pool = info_substitutes_check(joint_prior_fixture("pool3"));
  CHECK(pool.holds);
  CHECK(pool.pairs_checked == 49);
  const auto xo = info_substitutes_check(joint_prior_fixture("xor2"));
  CHECK_FALSE(xo.holds);
  CHECK(xo.max_violation == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(xo.witness_action >= 0);
  REQUIRE(xo.witness_a.size() == 2);  // learning the full feature...
  REQUIRE(xo.witness_b.size() == 2);  // ...helps only when paired
}

TEST_CASE("sampled diminishing-value check agrees on clear cases") {
  const auto hold =
      info_substitutes_check(joint_prior_fixture("corr2"), false, 400, 3);
  CHECK(hold.holds);
  CHECK(hold.pairs_checked == 400);
  const auto fail =
      info_substitutes_check(joint_prior_fixture("xor2"), false, 400, 3);
  CHECK_FALSE(fail.holds);  // violation sits at the full subsets; 400 draws
                            // over 9 pairs cannot miss it
  const auto rerun =
      info_substitutes_check(joint_prior_fixture("xor2"), false, 400, 3);
  CHECK(rerun.max_violation == fail.max_violation);
}

TEST_CASE("subset space guard for the exhaustive check") {
  DiscreteJointPrior wide;
  const int n = 13;
  for (int i = 0; i < n; ++i)
    wide.x_a_labels.push_back("a" + std::to_string(i));
  wide.x_b_labels = {"b0"};
  wide.y_labels = {"y0", "y1"};
  wide.pmf.assign(static_cast<std::size_t>(n) * 2, 1.0 / (2.0 * n));
  wide.alice_utility = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
  wide.validate();
  CHECK_THROWS_AS(info_substitutes_check(wide), SubsetSpaceTooLargeError);
  // The sampled variant still works.
  const auto rep = info_substitutes_check(wide, false, 50, 1);
  CHECK(rep.pairs_checked == 50);
}

TEST_CASE("plug-in guarantee arithmetic") {
  const auto b = theorem_bounds(3, 9000, 0.1, 1.0, 0.0);
  CHECK(b.zeta == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(b.quantal_gap == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(b.rounds_for_zeta == doctest::Approx(9000.0).epsilon(1e-12));
  const double z3 = std::cbrt(0.1);
  CHECK(b.estimation_error ==
        doctest::Approx(2.0 * (10.0 * z3 + 0.1) + std::expm1(40.0 * z3) + 0.1)
            .epsilon(1e-12));
  CHECK(b.total_deficit ==
        doctest::Approx(b.estimation_error + b.quantal_gap).epsilon(1e-12));
  CHECK_FALSE(b.corollary_applicable);  // 10 z^{1/3} = 4.64 >> 1/4

  // Inverse rule round-trips through the gap formula.
  const double k = rounds_for_agreement(4, 0.05, 0.2);
  CHECK(theorem_bounds(4, k, 0.2, 1.0, 0.0).zeta ==
        doctest::Approx(0.05).epsilon(1e-12));

  // The linearized bound kicks in exactly at lambda * 10 z^{1/3} = 1/4.
  const double lam_edge = 0.25 / (10.0 * z3);
  const auto inside = theorem_bounds(3, 9000, 0.1, lam_edge * 0.999, 0.05);
  const auto outside = theorem_bounds(3, 9000, 0.1, lam_edge * 1.001, 0.05);
  CHECK(inside.corollary_applicable);
  CHECK_FALSE(outside.corollary_applicable);
  CHECK(inside.total_deficit <= inside.corollary_deficit + 1e-12);
  const double lin = (20.0 + 40.0 * std::exp(1.0) * lam_edge * 0.999) * z3 +
                     3.0 * 0.1;
  CHECK(inside.corollary_deficit ==
        doctest::Approx(2.0 * 0.05 + lin +
                        std::log(3.0) / (lam_edge * 0.999))
            .epsilon(1e-12));
  CHECK(inside.total_deficit ==
        doctest::Approx(2.0 * 0.05 + inside.estimation_error +
                        inside.quantal_gap)
            .epsilon(1e-12));

  CHECK_THROWS_AS(theorem_bounds(0, 100, 0.1, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(theorem_bounds(3, 0.0, 0.1, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(theorem_bounds(3, 100, 0.0, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(theorem_bounds(3, 100, 1.5, 1.0, 0.0), DomainError);
  CHECK_THROWS_AS(theorem_bounds(3, 100, 0.1, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(theorem_bounds(3, 100, 0.1, 1.0, -0.1), DomainError);
  CHECK_THROWS_AS(rounds_for_agreement(3, 0.0, 0.1), DomainError);
}

TEST_CASE("generic transcript loop shapes and determinism") {
  AliceRule alice = [](int x_a, const auto& histories, Rng& rng) {
    std::vector<std::vector<double>> out;
    for (std::size_t j = 0; j < histories.size(); ++j)
      out.push_back({static_cast<double>(x_a), rng.uniform(0.0, 1.0)});
    return out;
  };
  BobRule bob = [](int x_b, const auto& history, Rng& rng) {
    return std::vector<double>{static_cast<double>(x_b) +
                               rng.uniform(0.0, 1.0),
                               static_cast<double>(history.size())};
  };
  const auto t = sample_transcript(alice, {bob, bob}, 1, {0, 1}, 3, 99);
  CHECK(t.rounds == 3);
  REQUIRE(t.histories.size() == 2);
  for (const auto& h : t.histories) {
    REQUIRE(h.size() == 6);  // alternating speakers, three rounds
    for (std::size_t i = 0; i < h.size(); ++i) {
      CHECK(h[i].speaker == static_cast<int>(i % 2));
      CHECK(h[i].round == static_cast<int>(i / 2) + 1);
    }
  }
  const auto t2 = sample_transcript(alice, {bob, bob}, 1, {0, 1}, 3, 99);
  const auto t3 = sample_transcript(alice, {bob, bob}, 1, {0, 1}, 3, 100);
  CHECK(t2.histories[1][5].message == t.histories[1][5].message);
  CHECK(t3.histories[1][5].message != t.histories[1][5].message);
  CHECK_THROWS_AS(sample_transcript(alice, {bob}, 1, {0, 1}, 3, 0),
                  DimensionError);
  CHECK_THROWS_AS(sample_transcript(alice, {}, 1, {}, 3, 0), DomainError);
}

}  // TEST_SUITE
