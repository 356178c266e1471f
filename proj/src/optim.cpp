#include "alignmarket/optim.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace alignmarket {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kFeasTol = 1e-8;
constexpr int kDegenerateRun = 40;  // pivots without progress before Bland

struct Tableau {
  // rows 0..m-1 are constraints, row m is the (reduced) cost row; the last
  // column is the RHS.
  std::size_t m = 0, n = 0;
  std::vector<double> t;
  std::vector<int> basis;

  double& at(std::size_t r, std::size_t c) { return t[r * (n + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return t[r * (n + 1) + c]; }
  double& rhs(std::size_t r) { return t[r * (n + 1) + n]; }
  double rhs(std::size_t r) const { return t[r * (n + 1) + n]; }
};

void pivot(Tableau& tb, std::size_t prow, std::size_t pcol) {
  const double pv = tb.at(prow, pcol);
  const double inv = 1.0 / pv;
  for (std::size_t c = 0; c <= tb.n; ++c) tb.at(prow, c) *= inv;
  tb.at(prow, pcol) = 1.0;
  for (std::size_t r = 0; r <= tb.m; ++r) {
    if (r == prow) continue;
    const double f = tb.at(r, pcol);
    if (f == 0.0) continue;
    for (std::size_t c = 0; c <= tb.n; ++c)
      tb.at(r, c) -= f * tb.at(prow, c);
    tb.at(r, pcol) = 0.0;
  }
  tb.basis[prow] = static_cast<int>(pcol);
}

// Runs the simplex loop on the current cost row.  `allowed[j]` masks columns
// eligible to enter.  Returns kOptimal or kUnbounded.
LpStatus iterate(Tableau& tb, const std::vector<bool>& allowed) {
  const long long max_iters =
      2000 + 200 * static_cast<long long>(tb.m + tb.n);
  int degenerate_run = 0;
  for (long long it = 0; it < max_iters; ++it) {
    const bool bland = degenerate_run >= kDegenerateRun;
    int entering = -1;
    double best = -kPivotTol;
    for (std::size_t j = 0; j < tb.n; ++j) {
      if (!allowed[j]) continue;
      const double c = tb.at(tb.m, j);
      if (c < -kPivotTol) {
        if (bland) {
          entering = static_cast<int>(j);
          break;
        }
        if (c < best) {
          best = c;
          entering = static_cast<int>(j);
        }
      }
    }
    if (entering < 0) return LpStatus::kOptimal;

    int leave = -1;
    double best_ratio = 0.0;
    for (std::size_t r = 0; r < tb.m; ++r) {
      const double a = tb.at(r, static_cast<std::size_t>(entering));
      if (a > kPivotTol) {
        const double ratio = tb.rhs(r) / a;
        if (leave < 0 || ratio < best_ratio - 1e-12 ||
            (ratio < best_ratio + 1e-12 &&
             tb.basis[r] < tb.basis[static_cast<std::size_t>(leave)])) {
          leave = static_cast<int>(r);
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) return LpStatus::kUnbounded;
    degenerate_run = best_ratio < 1e-12 ? degenerate_run + 1 : 0;
    pivot(tb, static_cast<std::size_t>(leave),
          static_cast<std::size_t>(entering));
  }
  throw NumericalFailure("simplex iteration limit exceeded");
}

}  // namespace

LpSolution solve_lp(const LpProblem& problem) {
  const std::size_t n = problem.objective.size();
  if (n == 0) throw DimensionError("LP has no variables");
  for (double c : problem.objective)
    if (!std::isfinite(c)) throw DomainError("LP objective must be finite");
  std::vector<double> lower =
      problem.lower.empty() ? std::vector<double>(n, 0.0) : problem.lower;
  std::vector<double> upper =
      problem.upper.empty() ? std::vector<double>(n, kInf) : problem.upper;
  if (lower.size() != n || upper.size() != n)
    throw DimensionError("LP bound lengths do not match variable count");
  const std::size_t m_ub = problem.b_ub.size();
  const std::size_t m_eq = problem.b_eq.size();
  if ((m_ub && (problem.a_ub.rows != m_ub || problem.a_ub.cols != n)) ||
      (m_eq && (problem.a_eq.rows != m_eq || problem.a_eq.cols != n)))
    throw DimensionError("LP constraint matrix shape mismatch");

  // Substitute each variable by non-negative internals:
  //   finite lower:        x = lo + z          (upper adds a <= row)
  //   upper only:          x = up - z
  //   free:                x = z+ - z-
  struct VarMap {
    int kind;  // 0: lo + z, 1: up - z, 2: z+ - z-
    std::size_t col, col2;
    double shift;
  };
  std::vector<VarMap> vmap(n);
  std::size_t nz = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (lower[i] > upper[i] + 1e-15)
      return {LpStatus::kInfeasible, {}, 0.0};
    if (std::isfinite(lower[i])) {
      vmap[i] = {0, nz++, 0, lower[i]};
    } else if (std::isfinite(upper[i])) {
      vmap[i] = {1, nz++, 0, upper[i]};
    } else {
      vmap[i] = {2, nz, nz + 1, 0.0};
      nz += 2;
    }
  }
  std::vector<std::size_t> bound_rows;  // vars needing z <= up - lo
  for (std::size_t i = 0; i < n; ++i)
    if (vmap[i].kind == 0 && std::isfinite(upper[i])) bound_rows.push_back(i);

  const std::size_t m = m_ub + m_eq + bound_rows.size();
  const std::size_t n_slack = m_ub + bound_rows.size();
  // Layout: [ z internals | slacks | artificials ]
  std::vector<std::vector<double>> rows(m, std::vector<double>(nz, 0.0));
  std::vector<double> rhs(m, 0.0);
  std::vector<int> slack_of_row(m, -1);

  auto emit = [&](std::size_t row, const Matrix& a, std::size_t r,
                  double b_val) {
    double b = b_val;
    for (std::size_t i = 0; i < n; ++i) {
      const double coef = a(r, i);
      if (coef == 0.0) continue;
      const VarMap& v = vmap[i];
      if (v.kind == 0) {
        rows[row][v.col] += coef;
        b -= coef * v.shift;
      } else if (v.kind == 1) {
        rows[row][v.col] -= coef;
        b -= coef * v.shift;
      } else {
        rows[row][v.col] += coef;
        rows[row][v.col2] -= coef;
      }
    }
    rhs[row] = b;
  };

  std::size_t row = 0;
  std::size_t slack_idx = nz;
  for (std::size_t r = 0; r < m_ub; ++r, ++row) {
    emit(row, problem.a_ub, r, problem.b_ub[r]);
    slack_of_row[row] = static_cast<int>(slack_idx++);
  }
  for (std::size_t k = 0; k < bound_rows.size(); ++k, ++row) {
    const std::size_t i = bound_rows[k];
    rows[row][vmap[i].col] = 1.0;
    rhs[row] = upper[i] - lower[i];
    slack_of_row[row] = static_cast<int>(slack_idx++);
  }
  for (std::size_t r = 0; r < m_eq; ++r, ++row) {
    emit(row, problem.a_eq, r, problem.b_eq[r]);
  }

  // Tableau with slacks and (lazily assigned) artificials.
  Tableau tb;
  tb.m = m;
  std::vector<int> artificial_of_row(m, -1);
  std::size_t n_art = 0;
  for (std::size_t r = 0; r < m; ++r) {
    const bool flip = rhs[r] < 0.0;
    if (flip) {
      for (double& v : rows[r]) v = -v;
      rhs[r] = -rhs[r];
    }
    // A +1 slack can seed the basis; otherwise the row needs an artificial.
    if (slack_of_row[r] < 0 || flip) artificial_of_row[r] = static_cast<int>(n_art++);
  }
  tb.n = nz + n_slack + n_art;
  tb.t.assign((tb.m + 1) * (tb.n + 1), 0.0);
  tb.basis.assign(tb.m, -1);
  std::size_t art_base = nz + n_slack;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < nz; ++c) tb.at(r, c) = rows[r][c];
    if (slack_of_row[r] >= 0) {
      const bool flipped = artificial_of_row[r] >= 0;
      tb.at(r, static_cast<std::size_t>(slack_of_row[r])) =
          flipped ? -1.0 : 1.0;
    }
    tb.rhs(r) = rhs[r];
    if (artificial_of_row[r] >= 0) {
      const std::size_t a =
          art_base + static_cast<std::size_t>(artificial_of_row[r]);
      tb.at(r, a) = 1.0;
      tb.basis[r] = static_cast<int>(a);
    } else {
      tb.basis[r] = slack_of_row[r];
    }
  }

  std::vector<bool> allowed(tb.n, true);

  // Phase 1: minimize the sum of artificials.
  if (n_art > 0) {
    for (std::size_t j = 0; j < n_art; ++j) tb.at(tb.m, art_base + j) = 1.0;
    for (std::size_t r = 0; r < m; ++r)
      if (artificial_of_row[r] >= 0)
        for (std::size_t c = 0; c <= tb.n; ++c)
          tb.at(tb.m, c) -= tb.at(r, c);
    const LpStatus st = iterate(tb, allowed);
    if (st == LpStatus::kUnbounded)
      throw NumericalFailure("phase-1 simplex reported unbounded");
    const double infeasibility = -tb.rhs(tb.m);
    if (infeasibility > kFeasTol) return {LpStatus::kInfeasible, {}, 0.0};
    // Drive remaining artificials out of the basis where possible.
    for (std::size_t r = 0; r < m; ++r) {
      if (tb.basis[r] < static_cast<int>(art_base)) continue;
      std::size_t c = 0;
      for (; c < art_base; ++c)
        if (std::abs(tb.at(r, c)) > kPivotTol) break;
      if (c < art_base) pivot(tb, r, c);
    }
    for (std::size_t j = art_base; j < tb.n; ++j) allowed[j] = false;
  }

  // Phase 2: real objective over the internal variables.
  for (std::size_t c = 0; c <= tb.n; ++c) tb.at(tb.m, c) = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = problem.objective[i];
    const VarMap& v = vmap[i];
    if (v.kind == 0)
      tb.at(tb.m, v.col) += c;
    else if (v.kind == 1)
      tb.at(tb.m, v.col) -= c;
    else {
      tb.at(tb.m, v.col) += c;
      tb.at(tb.m, v.col2) -= c;
    }
  }
  for (std::size_t r = 0; r < m; ++r) {
    const int b = tb.basis[r];
    const double cb = tb.at(tb.m, static_cast<std::size_t>(b));
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= tb.n; ++c)
      tb.at(tb.m, c) -= cb * tb.at(r, c);
  }
  const LpStatus st = iterate(tb, allowed);
  if (st == LpStatus::kUnbounded) return {LpStatus::kUnbounded, {}, 0.0};

  std::vector<double> z(tb.n, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    z[static_cast<std::size_t>(tb.basis[r])] = tb.rhs(r);
  LpSolution sol;
  sol.status = LpStatus::kOptimal;
  sol.x.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const VarMap& v = vmap[i];
    if (v.kind == 0)
      sol.x[i] = v.shift + z[v.col];
    else if (v.kind == 1)
      sol.x[i] = v.shift - z[v.col];
    else
      sol.x[i] = z[v.col] - z[v.col2];
  }
  sol.objective = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sol.objective += problem.objective[i] * sol.x[i];
  return sol;
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_fit_args(const Matrix& design, const std::vector<double>& target) {
  if (design.rows == 0 || design.cols == 0)
    throw DimensionError("design matrix is empty");
  if (design.rows != target.size())
    throw DimensionError("design rows and target length differ");
  for (double v : design.data)
    if (!std::isfinite(v)) throw InvariantError("design has non-finite entry");
  for (double v : target)
    if (!std::isfinite(v)) throw InvariantError("target has non-finite entry");
}

MatrixXd to_eigen(const Matrix& m) {
  MatrixXd e(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) e(r, c) = m(r, c);
  return e;
}

double fit_mse(const MatrixXd& u, const VectorXd& w, const VectorXd& y) {
  return (u * w - y).squaredNorm() / static_cast<double>(u.rows());
}

std::vector<int> support_of(const VectorXd& w) {
  std::vector<int> s;
  for (int i = 0; i < w.size(); ++i)
    if (w[i] > kSparsityThreshold) s.push_back(i);
  return s;
}

// Solve sub x = rhs for a symmetric PSD system; LDLT with an LU fallback for
// the rank-deficient (duplicate-column) case.
VectorXd solve_psd(const MatrixXd& sub, const VectorXd& rhs) {
  VectorXd z = sub.ldlt().solve(rhs);
  if (!z.allFinite() ||
      (sub * z - rhs).norm() > 1e-6 * (1.0 + rhs.norm())) {
    z = sub.fullPivLu().solve(rhs);
  }
  return z;
}

}  // namespace

AlignmentFit nnls(const Matrix& design, const std::vector<double>& target) {
  check_fit_args(design, target);
  const MatrixXd u = to_eigen(design);
  const VectorXd y =
      Eigen::Map<const VectorXd>(target.data(), static_cast<long>(target.size()));
  const long n = u.cols();
  const MatrixXd gram = u.transpose() * u;
  const VectorXd h = u.transpose() * y;
  const double scale = 1.0 + h.cwiseAbs().maxCoeff();
  const double tol = 1e-10 * scale;
  const int cap = 10 * static_cast<int>(n);

  VectorXd w = VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  int iterations = 0;

  while (iterations < cap) {
    const VectorXd grad = h - gram * w;
    int enter = -1;
    double best = tol;
    for (long i = 0; i < n; ++i)
      if (!passive[static_cast<std::size_t>(i)] && grad[i] > best) {
        best = grad[i];
        enter = static_cast<int>(i);
      }
    if (enter < 0) break;
    passive[static_cast<std::size_t>(enter)] = true;
    ++iterations;

    while (iterations < cap + 1) {
      std::vector<long> p;
      for (long i = 0; i < n; ++i)
        if (passive[static_cast<std::size_t>(i)]) p.push_back(i);
      MatrixXd sub(p.size(), p.size());
      VectorXd rhs(p.size());
      for (std::size_t a = 0; a < p.size(); ++a) {
        rhs[static_cast<long>(a)] = h[p[a]];
        for (std::size_t b = 0; b < p.size(); ++b)
          sub(static_cast<long>(a), static_cast<long>(b)) = gram(p[a], p[b]);
      }
      const VectorXd z = solve_psd(sub, rhs);
      bool all_pos = true;
      for (long i = 0; i < z.size(); ++i)
        if (z[i] <= 0.0) all_pos = false;
      if (all_pos) {
        w.setZero();
        for (std::size_t a = 0; a < p.size(); ++a) w[p[a]] = z[static_cast<long>(a)];
        break;
      }
      double alpha = 1.0;
      for (std::size_t a = 0; a < p.size(); ++a) {
        if (z[static_cast<long>(a)] <= 0.0) {
          const double wi = w[p[a]];
          const double denom = wi - z[static_cast<long>(a)];
          if (denom > 0.0) alpha = std::min(alpha, wi / denom);
        }
      }
      for (std::size_t a = 0; a < p.size(); ++a)
        w[p[a]] += alpha * (z[static_cast<long>(a)] - w[p[a]]);
      for (long i = 0; i < n; ++i) {
        if (passive[static_cast<std::size_t>(i)] && w[i] <= tol) {
          passive[static_cast<std::size_t>(i)] = false;
          w[i] = 0.0;
        }
      }
      ++iterations;
    }
  }

  AlignmentFit fit;
  fit.weights.assign(w.data(), w.data() + n);
  fit.mse = fit_mse(u, w, y);
  fit.iterations = iterations;
  fit.support = support_of(w);
  return fit;
}

AlignmentFit simplex_fit(const Matrix& design,
                         const std::vector<double>& target) {
  check_fit_args(design, target);
  const MatrixXd u = to_eigen(design);
  const VectorXd y =
      Eigen::Map<const VectorXd>(target.data(), static_cast<long>(target.size()));
  const long n = u.cols();
  const MatrixXd gram = u.transpose() * u;
  const VectorXd h = u.transpose() * y;
  const int cap = 10 * static_cast<int>(n);
  const double tol = 1e-12;

  VectorXd w = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  std::vector<bool> active(static_cast<std::size_t>(n), false);  // pinned at 0
  int iterations = 0;

  while (iterations < cap) {
    ++iterations;
    std::vector<long> f;
    for (long i = 0; i < n; ++i)
      if (!active[static_cast<std::size_t>(i)]) f.push_back(i);
    // KKT system for min ||Uw-y||^2 s.t. sum w = 1 on the free coordinates:
    //   [2 G_FF  -1] [z]   [2 h_F]
    //   [1^T      0] [t] = [1]
    const long nf = static_cast<long>(f.size());
    MatrixXd kkt = MatrixXd::Zero(nf + 1, nf + 1);
    VectorXd rhs(nf + 1);
    for (long a = 0; a < nf; ++a) {
      rhs[a] = 2.0 * h[f[static_cast<std::size_t>(a)]];
      kkt(a, nf) = -1.0;
      kkt(nf, a) = 1.0;
      for (long b = 0; b < nf; ++b)
        kkt(a, b) = 2.0 * gram(f[static_cast<std::size_t>(a)],
                               f[static_cast<std::size_t>(b)]);
    }
    rhs[nf] = 1.0;
    const VectorXd sol = kkt.fullPivLu().solve(rhs);
    const VectorXd z = sol.head(nf);
    const double theta = sol[nf];

    double min_z = kInf;
    for (long a = 0; a < nf; ++a) min_z = std::min(min_z, z[a]);
    if (min_z >= -tol) {
      // Feasible stationary point on the working set; check pinned coords.
      VectorXd w_new = VectorXd::Zero(n);
      for (long a = 0; a < nf; ++a)
        w_new[f[static_cast<std::size_t>(a)]] = std::max(z[a], 0.0);
      w = w_new;
      const VectorXd g = 2.0 * (gram * w - h);
      int release = -1;
      double worst = -1e-9;
      for (long i = 0; i < n; ++i) {
        if (!active[static_cast<std::size_t>(i)]) continue;
        const double lambda = g[i] - theta;
        if (lambda < worst) {
          worst = lambda;
          release = static_cast<int>(i);
        }
      }
      if (release < 0) break;
      active[static_cast<std::size_t>(release)] = false;
      continue;
    }
    // Step toward z until the first coordinate hits zero; pin it.
    double alpha = 1.0;
    int block = -1;
    for (long a = 0; a < nf; ++a) {
      if (z[a] < 0.0) {
        const double wi = w[f[static_cast<std::size_t>(a)]];
        const double denom = wi - z[a];
        if (denom > 0.0) {
          const double step = wi / denom;
          if (step < alpha) {
            alpha = step;
            block = static_cast<int>(f[static_cast<std::size_t>(a)]);
          }
        }
      }
    }
    for (long a = 0; a < nf; ++a) {
      const long i = f[static_cast<std::size_t>(a)];
      w[i] += alpha * (z[a] - w[i]);
    }
    if (block >= 0) {
      active[static_cast<std::size_t>(block)] = true;
      w[block] = 0.0;
    }
  }

  AlignmentFit fit;
  fit.weights.assign(w.data(), w.data() + n);
  fit.mse = fit_mse(u, w, y);
  fit.iterations = iterations;
  fit.support = support_of(w);
  return fit;
}

BaselineReport least_squares_baselines(const Matrix& design,
                                       const std::vector<double>& target) {
  check_fit_args(design, target);
  BaselineReport rep;
  const std::size_t items = design.rows;
  const std::size_t n = design.cols;
  double best = kInf;
  for (std::size_t j = 0; j < n; ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < items; ++i) {
      const double d = design(i, j) - target[i];
      sq += d * d;
    }
    sq /= static_cast<double>(items);
    if (sq < best) {
      best = sq;
      rep.best_index = static_cast<int>(j);
    }
  }
  rep.best_mse = best;
  double sq = 0.0;
  for (std::size_t i = 0; i < items; ++i) {
    double avg = 0.0;
    for (std::size_t j = 0; j < n; ++j) avg += design(i, j);
    avg /= static_cast<double>(n);
    const double d = avg - target[i];
    sq += d * d;
  }
  rep.average_mse = sq / static_cast<double>(items);
  return rep;
}

}  // namespace alignmarket
