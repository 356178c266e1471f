#include "alignmarket/hull.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "alignmarket/optim.hpp"
#include "alignmarket/rng.hpp"

namespace alignmarket {

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("line " + std::to_string(line_no) +
                      ": expected a number, got \"" + s + "\"");
  }
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void ScoreMatrix::validate() const {
  if (items.empty()) throw InvariantError("score matrix has no items");
  if (agent_names.empty()) throw InvariantError("score matrix has no agents");
  if (truth.size() != items.size())
    throw DimensionError("truth column length does not match items");
  if (scores.rows != items.size() || scores.cols != agent_names.size())
    throw DimensionError("score matrix shape does not match labels");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw DomainError("scale must be positive and finite");
  auto in_unit = [](double v) {
    return std::isfinite(v) && v >= -kInputTolerance &&
           v <= 1.0 + kInputTolerance;
  };
  for (double v : truth)
    if (!in_unit(v)) throw DomainError("truth value outside [0,1]");
  for (double v : scores.data)
    if (!in_unit(v)) throw DomainError("score value outside [0,1]");
}

ScoreMatrix scores_from_csv(const std::string& text) {
  std::stringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      ++line_no;
      if (!out.empty() && out.back() == '\r') out.pop_back();
      if (!out.empty()) return true;
    }
    return false;
  };

  ScoreMatrix m;
  if (!next_line(line) || line.rfind("#scale=", 0) != 0)
    throw SchemaError("scores csv must start with a #scale=<max> line");
  m.scale = parse_double(line.substr(7), line_no);
  if (!(m.scale > 0.0)) throw SchemaError("#scale must be positive");

  if (!next_line(line)) throw SchemaError("scores csv is missing its header");
  std::vector<std::string> header = split_csv(line);
  if (header.size() < 3 || header[0] != "item" || header[1] != "truth")
    throw SchemaError("scores csv header must be item,truth,<agents...>");
  m.agent_names.assign(header.begin() + 2, header.end());

  std::vector<std::vector<double>> rows;
  while (next_line(line)) {
    std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size())
      throw SchemaError("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " cells, got " +
                        std::to_string(cells.size()));
    m.items.push_back(cells[0]);
    m.truth.push_back(parse_double(cells[1], line_no) / m.scale);
    std::vector<double> row(m.agent_names.size());
    for (std::size_t j = 0; j < row.size(); ++j)
      row[j] = parse_double(cells[j + 2], line_no) / m.scale;
    rows.push_back(std::move(row));
  }
  m.scores = Matrix::from_rows(rows);
  m.validate();
  return m;
}

std::string scores_to_csv(const ScoreMatrix& m) {
  m.validate();
  std::string out = "#scale=" + format_double(m.scale) + "\n";
  out += "item,truth";
  for (const auto& name : m.agent_names) out += "," + name;
  out += "\n";
  for (std::size_t i = 0; i < m.num_items(); ++i) {
    out += m.items[i] + "," + format_double(m.truth[i] * m.scale);
    for (std::size_t j = 0; j < m.num_agents(); ++j)
      out += "," + format_double(m.scores(i, j) * m.scale);
    out += "\n";
  }
  return out;
}

ScoreMatrix load_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scores_from_csv(ss.str());
}

void save_scores(const ScoreMatrix& scores, const std::string& path) {
  const std::string text = scores_to_csv(scores);
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write " + path);
  out << text;
}

GeneratedAgents generate_noisy_agents(const std::vector<double>& truth,
                                      int num_agents, NoiseModel model,
                                      std::uint64_t seed) {
  if (truth.empty()) throw DomainError("need at least one item");
  if (num_agents < 1) throw DomainError("need at least one agent");
  if (!(model.param > 0.0) || !std::isfinite(model.param))
    throw DomainError("noise parameter must be positive and finite");
  for (double v : truth)
    if (!(std::isfinite(v) && v >= 0.0 && v <= 1.0))
      throw DomainError("truth values must lie in [0,1]");

  GeneratedAgents out;
  out.scores.items.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i)
    out.scores.items.push_back("item" + std::to_string(i + 1));
  out.scores.truth = truth;
  out.scores.scores = Matrix(truth.size(), static_cast<std::size_t>(num_agents));
  out.scores.scale = 1.0;
  out.realized_bias.assign(static_cast<std::size_t>(num_agents), 0.0);

  Rng rng(seed);
  for (int a = 0; a < num_agents; ++a) {
    out.scores.agent_names.push_back("agent" + std::to_string(a + 1));
    double bias = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      double noise;
      if (model.kind == NoiseModel::Kind::kUniform) {
        noise = rng.uniform(-model.param, model.param);
      } else {
        double z = rng.normal();
        while (std::abs(z) > 2.0) z = rng.normal();  // truncate at 2 sigma
        noise = model.param * z;
      }
      const double v = std::clamp(truth[i] + noise, 0.0, 1.0);
      out.scores.scores(i, static_cast<std::size_t>(a)) = v;
      bias += v - truth[i];
    }
    out.realized_bias[static_cast<std::size_t>(a)] =
        bias / static_cast<double>(truth.size());
  }
  out.scores.validate();
  return out;
}

namespace {

// Mean squared prediction error of `weights` over the given item rows.
double mse_on(const ScoreMatrix& m, const std::vector<int>& agents,
              const std::vector<double>& weights,
              const std::vector<std::size_t>& item_rows) {
  double total = 0.0;
  for (std::size_t i : item_rows) {
    double pred = 0.0;
    for (std::size_t j = 0; j < agents.size(); ++j)
      pred += weights[j] * m.scores(i, static_cast<std::size_t>(agents[j]));
    const double d = pred - m.truth[i];
    total += d * d;
  }
  return total / static_cast<double>(item_rows.size());
}

Matrix submatrix(const ScoreMatrix& m, const std::vector<int>& agents,
                 const std::vector<std::size_t>& item_rows) {
  Matrix out(item_rows.size(), agents.size());
  for (std::size_t r = 0; r < item_rows.size(); ++r)
    for (std::size_t c = 0; c < agents.size(); ++c)
      out(r, c) = m.scores(item_rows[r], static_cast<std::size_t>(agents[c]));
  return out;
}

struct Welford {
  double sum = 0.0, sumsq = 0.0;
  int n = 0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double stddev() const {
    if (n < 2) return 0.0;
    const double var = (sumsq - sum * sum / n) / (n - 1);
    return var > 0.0 ? std::sqrt(var) : 0.0;
  }
};

}  // namespace

ScalingCurve k_scaling_experiment(const ScoreMatrix& scores,
                                  const std::vector<int>& k_grid,
                                  int permutations, int folds,
                                  std::uint64_t seed) {
  scores.validate();
  const int na = static_cast<int>(scores.num_agents());
  const std::size_t ni = scores.num_items();
  if (k_grid.empty()) throw DomainError("empty committee-size grid");
  for (int k : k_grid)
    if (k < 1 || k > na)
      throw DomainError("grid size " + std::to_string(k) +
                        " outside [1, num_agents]");
  if (permutations < 1) throw DomainError("need at least one permutation");
  if (folds < 2) throw DomainError("need at least two folds");
  if (static_cast<std::size_t>(folds) > ni)
    throw InsufficientItemsError("a fold would be empty: " +
                                 std::to_string(folds) + " folds for " +
                                 std::to_string(ni) + " items");

  ScalingCurve curve;
  curve.k_grid = k_grid;
  curve.permutations = permutations;
  curve.folds = folds;
  curve.seed = seed;
  curve.nnls_train_by_perm.assign(
      static_cast<std::size_t>(permutations),
      std::vector<double>(k_grid.size(), 0.0));

  // Accumulators per k, filled over permutations with fold-averaged values.
  const std::size_t nk = k_grid.size();
  std::vector<Welford> best_w(nk), avg_w(nk), nnls_w(nk), simp_w(nk);
  std::vector<Welford> nnls_supp(nk), simp_supp(nk);
  std::vector<Welford> best_tr(nk), avg_tr(nk), nnls_tr(nk), simp_tr(nk);

  for (int p = 0; p < permutations; ++p) {
    Rng rng(seed + static_cast<std::uint64_t>(p));
    const std::vector<int> agent_order = rng.permutation(na);
    std::vector<std::size_t> item_order(ni);
    for (std::size_t i = 0; i < ni; ++i) item_order[i] = i;
    rng.shuffle(item_order);

    // Contiguous fold blocks over the shuffled order; the first n%folds
    // blocks take one extra item.
    std::vector<std::vector<std::size_t>> fold_rows(
        static_cast<std::size_t>(folds));
    {
      const std::size_t base = ni / static_cast<std::size_t>(folds);
      const std::size_t extra = ni % static_cast<std::size_t>(folds);
      std::size_t at = 0;
      for (std::size_t f = 0; f < static_cast<std::size_t>(folds); ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        fold_rows[f].assign(item_order.begin() + static_cast<long>(at),
                            item_order.begin() + static_cast<long>(at + len));
        at += len;
      }
    }

    // Per-k accumulators over folds for this permutation.
    std::vector<double> f_best(nk, 0), f_avg(nk, 0), f_nnls(nk, 0),
        f_simp(nk, 0), f_nnls_supp(nk, 0), f_simp_supp(nk, 0);
    std::vector<double> f_best_tr(nk, 0), f_avg_tr(nk, 0), f_nnls_tr(nk, 0),
        f_simp_tr(nk, 0);

    for (std::size_t f = 0; f < static_cast<std::size_t>(folds); ++f) {
      const std::vector<std::size_t>& test_rows = fold_rows[f];
      std::vector<std::size_t> train_rows;
      train_rows.reserve(ni - test_rows.size());
      for (std::size_t g = 0; g < static_cast<std::size_t>(folds); ++g)
        if (g != f)
          train_rows.insert(train_rows.end(), fold_rows[g].begin(),
                            fold_rows[g].end());
      std::vector<double> train_truth;
      train_truth.reserve(train_rows.size());
      for (std::size_t i : train_rows) train_truth.push_back(scores.truth[i]);

      for (std::size_t ki = 0; ki < nk; ++ki) {
        const std::vector<int> agents(
            agent_order.begin(), agent_order.begin() + k_grid[ki]);
        const Matrix design = submatrix(scores, agents, train_rows);

        const AlignmentFit nn = nnls(design, train_truth);
        const AlignmentFit sf = simplex_fit(design, train_truth);
        f_nnls[ki] += mse_on(scores, agents, nn.weights, test_rows);
        f_simp[ki] += mse_on(scores, agents, sf.weights, test_rows);
        f_nnls_supp[ki] += static_cast<double>(nn.support.size());
        f_simp_supp[ki] += static_cast<double>(sf.support.size());
        f_nnls_tr[ki] += nn.mse;
        f_simp_tr[ki] += sf.mse;

        const BaselineReport base = least_squares_baselines(design, train_truth);
        std::vector<double> pick(agents.size(), 0.0);
        pick[static_cast<std::size_t>(base.best_index)] = 1.0;
        f_best[ki] += mse_on(scores, agents, pick, test_rows);
        std::vector<double> unif(agents.size(),
                                 1.0 / static_cast<double>(agents.size()));
        f_avg[ki] += mse_on(scores, agents, unif, test_rows);
        f_best_tr[ki] += base.best_mse;
        f_avg_tr[ki] += base.average_mse;
      }
    }

    const double nf = static_cast<double>(folds);
    for (std::size_t ki = 0; ki < nk; ++ki) {
      best_w[ki].add(f_best[ki] / nf);
      avg_w[ki].add(f_avg[ki] / nf);
      nnls_w[ki].add(f_nnls[ki] / nf);
      simp_w[ki].add(f_simp[ki] / nf);
      nnls_supp[ki].add(f_nnls_supp[ki] / nf);
      simp_supp[ki].add(f_simp_supp[ki] / nf);
      best_tr[ki].add(f_best_tr[ki] / nf);
      avg_tr[ki].add(f_avg_tr[ki] / nf);
      nnls_tr[ki].add(f_nnls_tr[ki] / nf);
      simp_tr[ki].add(f_simp_tr[ki] / nf);
      curve.nnls_train_by_perm[static_cast<std::size_t>(p)][ki] =
          f_nnls_tr[ki] / nf;
    }
  }

  for (std::size_t ki = 0; ki < nk; ++ki) {
    ScalingRecord rec;
    rec.k = k_grid[ki];
    rec.best_mse_mean = best_w[ki].mean();
    rec.best_mse_std = best_w[ki].stddev();
    rec.avg_mse_mean = avg_w[ki].mean();
    rec.avg_mse_std = avg_w[ki].stddev();
    rec.nnls_mse_mean = nnls_w[ki].mean();
    rec.nnls_mse_std = nnls_w[ki].stddev();
    rec.simplex_mse_mean = simp_w[ki].mean();
    rec.simplex_mse_std = simp_w[ki].stddev();
    rec.nnls_support_mean = nnls_supp[ki].mean();
    rec.nnls_support_std = nnls_supp[ki].stddev();
    rec.simplex_support_mean = simp_supp[ki].mean();
    rec.simplex_support_std = simp_supp[ki].stddev();
    rec.best_train_mse_mean = best_tr[ki].mean();
    rec.avg_train_mse_mean = avg_tr[ki].mean();
    rec.nnls_train_mse_mean = nnls_tr[ki].mean();
    rec.simplex_train_mse_mean = simp_tr[ki].mean();
    curve.records.push_back(rec);
  }
  return curve;
}

int hoeffding_committee_size(int num_actions, int num_states, double epsilon,
                             double delta) {
  if (num_actions < 1 || num_states < 1)
    throw DomainError("need at least one action and one state");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon))
    throw DomainError("epsilon must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must be in (0,1)");
  const double bound =
      (std::log(2.0 * num_actions * num_states) - std::log(delta)) /
      (2.0 * epsilon * epsilon);
  if (bound >= 2e9) throw DomainError("committee size overflows");
  return static_cast<int>(std::floor(bound)) + 1;
}

double validate_alignment_probability(int num_actions, int num_states,
                                      double epsilon, double delta, int trials,
                                      std::uint64_t seed,
                                      double noise_half_width) {
  if (trials < 1) throw DomainError("need at least one trial");
  if (!(noise_half_width > 0.0 && noise_half_width <= 0.5))
    throw DomainError("noise half-width must be in (0, 0.5]");
  const int k = hoeffding_committee_size(num_actions, num_states, epsilon,
                                         delta);
  const std::size_t cells =
      static_cast<std::size_t>(num_actions) *
      static_cast<std::size_t>(num_states);
  Rng rng(seed);
  std::vector<double> truth(cells), sum(cells);
  int failures = 0;
  for (int t = 0; t < trials; ++t) {
    for (std::size_t c = 0; c < cells; ++c) {
      truth[c] = rng.uniform();
      sum[c] = 0.0;
    }
    for (int j = 0; j < k; ++j)
      for (std::size_t c = 0; c < cells; ++c) {
        // Cap the half-width so the perturbed value stays in [0,1] without
        // clamping; the agent mean is then exactly the true value.
        const double h =
            std::min({noise_half_width, truth[c], 1.0 - truth[c]});
        sum[c] += truth[c] + rng.uniform(-h, h);
      }
    for (std::size_t c = 0; c < cells; ++c)
      if (std::abs(sum[c] / k - truth[c]) > epsilon) {
        ++failures;
        break;
      }
  }
  return static_cast<double>(failures) / static_cast<double>(trials);
}

}  // namespace alignmarket
