#include "alignmarket/dialogue.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace alignmarket {

using nlohmann::json;

void DiscreteJointPrior::validate() const {
  if (x_a_labels.empty() || x_b_labels.empty() || y_labels.empty())
    throw InvariantError("joint prior needs nonempty label sets");
  if (pmf.size() != num_x_a() * num_x_b() * num_y())
    throw DimensionError("pmf size does not match the label sets");
  double total = 0.0;
  for (double v : pmf) {
    if (!std::isfinite(v) || v < -kInputTolerance)
      throw InvariantError("pmf entries must be non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > kInputTolerance)
    throw InvariantError("pmf must sum to 1");
  if (alice_utility.rows != num_y())
    throw DimensionError("utility rows must match the state labels");
  if (alice_utility.cols == 0) throw InvariantError("need at least one action");
  for (double v : alice_utility.data)
    if (!std::isfinite(v) || v < 0.0)
      throw InvariantError("utility entries must be finite and non-negative");
}

namespace {

const json& require(const json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end())
    throw SchemaError(std::string("missing field \"") + field + "\"");
  return *it;
}

std::vector<std::string> strings_from_json(const json& j, const char* field) {
  if (!j.is_array())
    throw SchemaError(std::string(field) + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& v : j) {
    if (!v.is_string())
      throw SchemaError(std::string(field) + " has a non-string entry");
    out.push_back(v.get<std::string>());
  }
  return out;
}

double number_from_json(const json& v, const char* field) {
  if (!v.is_number())
    throw SchemaError(std::string(field) + " has a non-numeric entry");
  return v.get<double>();
}

}  // namespace

DiscreteJointPrior joint_prior_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("top level must be an object");
  DiscreteJointPrior p;
  p.x_a_labels = strings_from_json(require(j, "x_a"), "x_a");
  p.x_b_labels = strings_from_json(require(j, "x_b"), "x_b");
  p.y_labels = strings_from_json(require(j, "y"), "y");

  const json& pmf = require(j, "pmf");
  if (!pmf.is_array() || pmf.size() != p.num_x_a())
    throw SchemaError("pmf must have one block per x_a label");
  p.pmf.reserve(p.num_x_a() * p.num_x_b() * p.num_y());
  for (const auto& block : pmf) {
    if (!block.is_array() || block.size() != p.num_x_b())
      throw SchemaError("pmf blocks must have one row per x_b label");
    for (const auto& row : block) {
      if (!row.is_array() || row.size() != p.num_y())
        throw SchemaError("pmf rows must have one entry per y label");
      for (const auto& v : row) p.pmf.push_back(number_from_json(v, "pmf"));
    }
  }

  const json& u = require(j, "alice_u");
  if (!u.is_array() || u.size() != p.num_y())
    throw SchemaError("alice_u must have one row per y label");
  std::vector<std::vector<double>> rows;
  for (const auto& row : u) {
    if (!row.is_array()) throw SchemaError("alice_u rows must be arrays");
    std::vector<double> r;
    for (const auto& v : row) r.push_back(number_from_json(v, "alice_u"));
    rows.push_back(std::move(r));
  }
  try {
    p.alice_utility = Matrix::from_rows(rows);
  } catch (const DimensionError& e) {
    throw SchemaError(std::string("alice_u: ") + e.what());
  }
  p.validate();
  return p;
}

std::string joint_prior_to_json(const DiscreteJointPrior& p) {
  json j;
  j["x_a"] = p.x_a_labels;
  j["x_b"] = p.x_b_labels;
  j["y"] = p.y_labels;
  json pmf = json::array();
  for (std::size_t xa = 0; xa < p.num_x_a(); ++xa) {
    json block = json::array();
    for (std::size_t xb = 0; xb < p.num_x_b(); ++xb) {
      json row = json::array();
      for (std::size_t y = 0; y < p.num_y(); ++y) row.push_back(p.p(xa, xb, y));
      block.push_back(row);
    }
    pmf.push_back(block);
  }
  j["pmf"] = pmf;
  j["alice_u"] = p.alice_utility.to_rows();
  return j.dump(2) + "\n";
}

DiscreteJointPrior load_joint_prior(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return joint_prior_from_json(buf.str());
}

void save_joint_prior(const DiscreteJointPrior& prior,
                      const std::string& path) {
  prior.validate();
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  out << joint_prior_to_json(prior);
}

namespace {

std::vector<std::string> indexed_labels(const char* stem, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(stem + std::to_string(i));
  return out;
}

// Joint prior where both features are conditionally independent signals of y.
DiscreteJointPrior conditional_signals(
    const std::vector<double>& py,
    const std::vector<std::vector<double>>& pa_given_y,
    const std::vector<std::vector<double>>& pb_given_y, Matrix u) {
  const std::size_t na = pa_given_y[0].size();
  const std::size_t nb = pb_given_y[0].size();
  const std::size_t ny = py.size();
  DiscreteJointPrior p;
  p.x_a_labels = indexed_labels("a", na);
  p.x_b_labels = indexed_labels("b", nb);
  p.y_labels = indexed_labels("y", ny);
  p.pmf.resize(na * nb * ny);
  for (std::size_t xa = 0; xa < na; ++xa)
    for (std::size_t xb = 0; xb < nb; ++xb)
      for (std::size_t y = 0; y < ny; ++y)
        p.pmf[(xa * nb + xb) * ny + y] =
            py[y] * pa_given_y[y][xa] * pb_given_y[y][xb];
  p.alice_utility = std::move(u);
  return p;
}

Matrix identity2() {
  Matrix u(2, 2, 0.0);
  u(0, 0) = 1.0;
  u(1, 1) = 1.0;
  return u;
}

DiscreteJointPrior make_corr2() {
  // Two noisy, conditionally independent reads of a fair binary state.
  return conditional_signals({0.5, 0.5}, {{0.8, 0.2}, {0.2, 0.8}},
                             {{0.7, 0.3}, {0.3, 0.7}}, identity2());
}

DiscreteJointPrior make_xor2() {
  // y = x_a XOR x_b with independent fair features: each feature alone is
  // useless, together they pin y down.  The classic complements case.
  DiscreteJointPrior p;
  p.x_a_labels = indexed_labels("a", 2);
  p.x_b_labels = indexed_labels("b", 2);
  p.y_labels = indexed_labels("y", 2);
  p.pmf.assign(8, 0.0);
  for (std::size_t xa = 0; xa < 2; ++xa)
    for (std::size_t xb = 0; xb < 2; ++xb)
      p.pmf[(xa * 2 + xb) * 2 + (xa ^ xb)] = 0.25;
  p.alice_utility = identity2();
  return p;
}

DiscreteJointPrior make_pool3() {
  // The first party cannot tell a0 from a1 apart informationally, so her
  // opening message pools them.
  return conditional_signals({0.5, 0.5},
                             {{0.4, 0.4, 0.2}, {0.2, 0.2, 0.6}},
                             {{0.5, 0.3, 0.2}, {0.2, 0.3, 0.5}}, identity2());
}

DiscreteJointPrior make_skew3() {
  // Skewed state, informative first party, nearly uninformative second,
  // asymmetric payoffs.
  Matrix u(2, 2, 0.0);
  u(0, 0) = 1.0;
  u(0, 1) = 0.0;
  u(1, 0) = 0.2;
  u(1, 1) = 0.9;
  return conditional_signals({0.7, 0.3},
                             {{0.7, 0.2, 0.1}, {0.1, 0.3, 0.6}},
                             {{0.4, 0.35, 0.25}, {0.3, 0.35, 0.35}},
                             std::move(u));
}

}  // namespace

std::vector<std::string> joint_prior_fixture_names() {
  return {"corr2", "xor2", "pool3", "skew3"};
}

DiscreteJointPrior joint_prior_fixture(const std::string& name) {
  DiscreteJointPrior p;
  if (name == "corr2") p = make_corr2();
  else if (name == "xor2") p = make_xor2();
  else if (name == "pool3") p = make_pool3();
  else if (name == "skew3") p = make_skew3();
  else throw DomainError("unknown conversation prior \"" + name + "\"");
  p.validate();
  return p;
}

Transcript sample_transcript(const AliceRule& alice_rule,
                             const std::vector<BobRule>& bob_rules, int x_a,
                             const std::vector<int>& x_b, int rounds,
                             std::uint64_t seed) {
  if (bob_rules.size() != x_b.size())
    throw DimensionError("one rule per counterpart feature required");
  if (bob_rules.empty()) throw DomainError("need at least one counterpart");
  if (rounds < 0) throw DomainError("rounds must be non-negative");
  Transcript t;
  t.histories.resize(bob_rules.size());
  t.rounds = rounds;
  Rng rng(seed);
  for (int r = 1; r <= rounds; ++r) {
    const auto msgs = alice_rule(x_a, t.histories, rng);
    if (msgs.size() != bob_rules.size())
      throw DimensionError("first party must message every counterpart");
    for (std::size_t j = 0; j < bob_rules.size(); ++j)
      t.histories[j].push_back({r, 0, msgs[j]});
    for (std::size_t j = 0; j < bob_rules.size(); ++j) {
      auto reply = bob_rules[j](x_b[j], t.histories[j], rng);
      t.histories[j].push_back({r, 1, std::move(reply)});
    }
  }
  return t;
}

namespace {

// Posterior mean of u(., a) for each action, conditioning on one's own
// feature and the other side's feature lying in `feasible`.  Empty result
// means the conditioning event has zero probability.
std::vector<double> restricted_belief(const DiscreteJointPrior& prior,
                                      int speaker, std::size_t own,
                                      const std::vector<char>& feasible) {
  const std::size_t ny = prior.num_y();
  const std::size_t nact = prior.num_actions();
  std::vector<double> ymass(ny, 0.0);
  double mass = 0.0;
  if (speaker == 0) {
    for (std::size_t xb = 0; xb < prior.num_x_b(); ++xb) {
      if (!feasible[xb]) continue;
      for (std::size_t y = 0; y < ny; ++y) {
        ymass[y] += prior.p(own, xb, y);
        mass += prior.p(own, xb, y);
      }
    }
  } else {
    for (std::size_t xa = 0; xa < prior.num_x_a(); ++xa) {
      if (!feasible[xa]) continue;
      for (std::size_t y = 0; y < ny; ++y) {
        ymass[y] += prior.p(xa, own, y);
        mass += prior.p(xa, own, y);
      }
    }
  }
  if (mass <= 0.0) return {};
  std::vector<double> belief(nact, 0.0);
  for (std::size_t y = 0; y < ny; ++y)
    for (std::size_t a = 0; a < nact; ++a)
      belief[a] += ymass[y] / mass * prior.alice_utility(y, a);
  return belief;
}

bool messages_match(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) return false;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (std::abs(u[i] - v[i]) > kInputTolerance) return false;
  return true;
}

// Keep the candidates on `side` whose straightforward message, given the
// current feasible set of the other side, matches what was actually said.
void refine(const DiscreteJointPrior& prior, int speaker,
            std::vector<char>& own_side, const std::vector<char>& other_side,
            const std::vector<double>& said) {
  for (std::size_t c = 0; c < own_side.size(); ++c) {
    if (!own_side[c]) continue;
    const auto belief = restricted_belief(prior, speaker, c, other_side);
    if (belief.empty() || !messages_match(belief, said)) own_side[c] = 0;
  }
}

}  // namespace

ConversationResult run_straightforward_conversation(
    const DiscreteJointPrior& prior, int x_a, int x_b, int rounds) {
  prior.validate();
  if (x_a < 0 || static_cast<std::size_t>(x_a) >= prior.num_x_a())
    throw DomainError("x_a out of range");
  if (x_b < 0 || static_cast<std::size_t>(x_b) >= prior.num_x_b())
    throw DomainError("x_b out of range");
  if (rounds < 0) throw DomainError("rounds must be non-negative");
  const std::size_t xa = static_cast<std::size_t>(x_a);
  const std::size_t xb = static_cast<std::size_t>(x_b);
  double pair_mass = 0.0;
  for (std::size_t y = 0; y < prior.num_y(); ++y) pair_mass += prior.p(xa, xb, y);
  if (pair_mass <= 0.0)
    throw ZeroProbabilityFeaturesError("the feature pair has zero probability");

  // Feasible sets as common knowledge: what the counterpart still considers
  // possible for x_a, and the first party for x_b.
  std::vector<char> sa(prior.num_x_a(), 1), sb(prior.num_x_b(), 1);

  ConversationResult res;
  res.transcript.histories.resize(1);
  res.transcript.rounds = rounds;
  res.alice_beliefs.push_back(restricted_belief(prior, 0, xa, sb));
  res.bob_beliefs.push_back(restricted_belief(prior, 1, xb, sa));

  for (int r = 1; r <= rounds; ++r) {
    const auto m_alice = restricted_belief(prior, 0, xa, sb);
    res.transcript.histories[0].push_back({r, 0, m_alice});
    refine(prior, 0, sa, sb, m_alice);

    const auto m_bob = restricted_belief(prior, 1, xb, sa);
    res.transcript.histories[0].push_back({r, 1, m_bob});
    refine(prior, 1, sb, sa, m_bob);

    res.alice_beliefs.push_back(restricted_belief(prior, 0, xa, sb));
    res.bob_beliefs.push_back(m_bob);
  }
  return res;
}

int agreement_round(const ConversationResult& result, double zeta) {
  if (!(zeta >= 0.0)) throw DomainError("zeta must be non-negative");
  for (std::size_t r = 0; r < result.alice_beliefs.size(); ++r) {
    const auto& a = result.alice_beliefs[r];
    const auto& b = result.bob_beliefs[r];
    if (a.size() != b.size()) continue;
    double sup = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      sup = std::max(sup, std::abs(a[i] - b[i]));
    if (sup <= zeta) return static_cast<int>(r);
  }
  return -1;
}

std::vector<double> quantal_response(const std::vector<double>& belief,
                                     double lambda) {
  if (belief.empty()) throw DomainError("empty value vector");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");
  for (double v : belief)
    if (!std::isfinite(v)) throw DomainError("values must be finite");
  const std::size_t n = belief.size();
  if (lambda == 0.0)
    return std::vector<double>(n, 1.0 / static_cast<double>(n));
  const double m = *std::max_element(belief.begin(), belief.end());
  std::vector<double> p(n);
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    p[a] = std::exp(lambda * (belief[a] - m));
    total += p[a];
  }
  for (double& v : p) v /= total;
  return p;
}

double quantal_gap(const std::vector<double>& belief, double lambda) {
  const auto p = quantal_response(belief, lambda);
  const double best = *std::max_element(belief.begin(), belief.end());
  double got = 0.0;
  for (std::size_t a = 0; a < belief.size(); ++a) got += p[a] * belief[a];
  return best - got;
}

StabilityReport softmax_stability(const std::vector<double>& u,
                                  const std::vector<double>& u_prime,
                                  double lambda) {
  if (u.size() != u_prime.size())
    throw DimensionError("value vectors differ in length");
  const auto p = quantal_response(u, lambda);
  const auto q = quantal_response(u_prime, lambda);
  StabilityReport rep;
  for (std::size_t a = 0; a < u.size(); ++a) {
    rep.l1_distance += std::abs(p[a] - q[a]);
    rep.sup_distance = std::max(rep.sup_distance, std::abs(u[a] - u_prime[a]));
  }
  rep.bound = std::expm1(2.0 * lambda * rep.sup_distance);
  return rep;
}

namespace {

std::vector<int> mask_to_indices(std::uint32_t mask) {
  std::vector<int> out;
  for (int i = 0; mask; ++i, mask >>= 1)
    if (mask & 1) out.push_back(i);
  return out;
}

}  // namespace

SubstitutesReport info_substitutes_check(const DiscreteJointPrior& prior,
                                         bool exhaustive, int samples,
                                         std::uint64_t seed) {
  prior.validate();
  const std::size_t na = prior.num_x_a();
  const std::size_t nb = prior.num_x_b();
  const std::size_t nact = prior.num_actions();
  if (na > (exhaustive ? 12u : 30u) || nb > (exhaustive ? 12u : 30u))
    throw SubsetSpaceTooLargeError("too many features for the subset check");
  if (!exhaustive && samples < 1) throw DomainError("need at least one sample");

  // Cell masses and per-action weighted sums; everything else is a
  // rectangle aggregate of these.
  std::vector<double> m(na * nb, 0.0);
  std::vector<std::vector<double>> s(nact, std::vector<double>(na * nb, 0.0));
  for (std::size_t i = 0; i < na; ++i)
    for (std::size_t j = 0; j < nb; ++j)
      for (std::size_t y = 0; y < prior.num_y(); ++y) {
        const double p = prior.p(i, j, y);
        m[i * nb + j] += p;
        for (std::size_t a = 0; a < nact; ++a)
          s[a][i * nb + j] += p * prior.alice_utility(y, a);
      }

  SubstitutesReport rep;
  double best_diff = -kInf;

  auto check_pair = [&](std::uint32_t mask_a, std::uint32_t mask_b) {
    ++rep.pairs_checked;
    double mass_ab = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      if (!(mask_a >> i & 1)) continue;
      for (std::size_t j = 0; j < nb; ++j)
        if (mask_b >> j & 1) mass_ab += m[i * nb + j];
    }
    if (mass_ab <= 0.0) return;
    for (std::size_t a = 0; a < nact; ++a) {
      const auto& sa = s[a];
      // Gains from pinning down one side's exact feature, as sums of
      // squared-mean terms; the squared-value terms cancel.
      double s_ab = 0.0, gain_rows = 0.0, gain_cols = 0.0, gain_cells = 0.0;
      for (std::size_t i = 0; i < na; ++i) {
        if (!(mask_a >> i & 1)) continue;
        double mi = 0.0, si = 0.0;
        for (std::size_t j = 0; j < nb; ++j) {
          if (!(mask_b >> j & 1)) continue;
          const double mc = m[i * nb + j];
          mi += mc;
          si += sa[i * nb + j];
          if (mc > 0.0)
            gain_cells += sa[i * nb + j] * sa[i * nb + j] / mc;
        }
        s_ab += si;
        if (mi > 0.0) gain_rows += si * si / mi;
      }
      for (std::size_t j = 0; j < nb; ++j) {
        if (!(mask_b >> j & 1)) continue;
        double mj = 0.0, sj = 0.0;
        for (std::size_t i = 0; i < na; ++i) {
          if (!(mask_a >> i & 1)) continue;
          mj += m[i * nb + j];
          sj += sa[i * nb + j];
        }
        if (mj > 0.0) gain_cols += sj * sj / mj;
      }
      // Learning x_a exactly reduces MSE by (gain_rows - s_ab^2/mass) when
      // x_b is only known up to the subset, and by (gain_cells - gain_cols)
      // when x_b is known exactly; substitutes demand the latter is smaller.
      const double late = gain_cells - gain_cols;
      const double early = gain_rows - s_ab * s_ab / mass_ab;
      const double diff = (late - early) / mass_ab;
      if (diff > best_diff) {
        best_diff = diff;
        rep.witness_action = static_cast<int>(a);
        rep.witness_a = mask_to_indices(mask_a);
        rep.witness_b = mask_to_indices(mask_b);
      }
    }
  };

  const std::uint32_t full_a = (std::uint32_t{1} << na) - 1;
  const std::uint32_t full_b = (std::uint32_t{1} << nb) - 1;
  if (exhaustive) {
    for (std::uint32_t ma = 1; ma <= full_a; ++ma)
      for (std::uint32_t mb = 1; mb <= full_b; ++mb) check_pair(ma, mb);
  } else {
    Rng rng(seed);
    for (int t = 0; t < samples; ++t)
      check_pair(static_cast<std::uint32_t>(
                     rng.uniform_int(1, static_cast<int>(full_a))),
                 static_cast<std::uint32_t>(
                     rng.uniform_int(1, static_cast<int>(full_b))));
  }

  rep.holds = best_diff <= kComputeTolerance;
  rep.max_violation = std::max(0.0, best_diff);
  if (rep.holds) {
    rep.witness_action = -1;
    rep.witness_a.clear();
    rep.witness_b.clear();
  }
  return rep;
}

TheoremBounds theorem_bounds(int num_actions, double rounds, double delta_conv,
                             double lambda, double epsilon) {
  if (num_actions < 1) throw DomainError("need at least one action");
  if (!(rounds > 0.0) || !std::isfinite(rounds))
    throw DomainError("rounds must be positive");
  if (!(delta_conv > 0.0 && delta_conv < 1.0))
    throw DomainError("delta must be in (0,1)");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw DomainError("lambda must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw DomainError("epsilon must be non-negative");

  TheoremBounds b;
  b.zeta = std::sqrt(3.0 * num_actions / (rounds * delta_conv));
  const double z13 = std::cbrt(b.zeta);
  b.estimation_error = 2.0 * (10.0 * z13 + delta_conv) +
                       std::expm1(4.0 * lambda * 10.0 * z13) + delta_conv;
  b.quantal_gap = std::log(static_cast<double>(num_actions)) / lambda;
  b.total_deficit = 2.0 * epsilon + b.estimation_error + b.quantal_gap;
  b.corollary_applicable = lambda * 10.0 * z13 <= 0.25;
  b.corollary_deficit = 2.0 * epsilon +
                        (20.0 + 40.0 * std::numbers::e * lambda) * z13 +
                        3.0 * delta_conv + b.quantal_gap;
  b.rounds_for_zeta = 3.0 * num_actions / (b.zeta * b.zeta * delta_conv);
  return b;
}

double rounds_for_agreement(int num_actions, double zeta, double delta_conv) {
  if (num_actions < 1) throw DomainError("need at least one action");
  if (!(zeta > 0.0)) throw DomainError("zeta must be positive");
  if (!(delta_conv > 0.0 && delta_conv < 1.0))
    throw DomainError("delta must be in (0,1)");
  return 3.0 * num_actions / (zeta * zeta * delta_conv);
}

}  // namespace alignmarket
