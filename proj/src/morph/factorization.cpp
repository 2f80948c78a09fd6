// Copyright 2026 The netmorph Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>

#include "netmorph/morph.hpp"

namespace netmorph {

namespace {

using Eigen::MatrixXd;

// Tikhonov-damped least squares through the normal equations, in whichever
// of the primal (A^T A) or dual (A A^T) form is smaller. Two refinement
// sweeps remove most of the bias introduced by the damping.
MatrixXd ridge_solve(const MatrixXd& a, const MatrixXd& b, double ridge) {
  const Eigen::Index m = a.rows(), n = a.cols();
  const bool primal = n <= m;
  const Eigen::Index dim = primal ? n : m;

  MatrixXd normal = MatrixXd::Zero(dim, dim);
  if (primal) {
    normal.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
  } else {
    normal.selfadjointView<Eigen::Lower>().rankUpdate(a);
  }
  const double trace = normal.diagonal().sum();
  if (!(trace > 0.0)) return MatrixXd::Zero(n, b.cols());
  normal.diagonal().array() += ridge * trace / static_cast<double>(dim);
  const Eigen::LDLT<MatrixXd, Eigen::Lower> ldlt(normal);

  auto step = [&](const MatrixXd& rhs) -> MatrixXd {
    if (primal) return ldlt.solve(a.transpose() * rhs);
    return a.transpose() * ldlt.solve(rhs);
  };
  MatrixXd x = step(b);
  for (int sweep = 0; sweep < 2; ++sweep) x += step(b - a * x);
  return x;
}

struct Dims {
  std::size_t cin, cout, mid, k1, k2, kt;
};

// Rows (o, p, q), cols (m, u, v): compose(first, second) restricted to one
// input channel is A * vec(first[:, i]).
MatrixXd first_step_matrix(const Tensor& second, const Dims& d) {
  MatrixXd a = MatrixXd::Zero(d.cout * d.kt * d.kt, d.mid * d.k1 * d.k1);
  for (std::size_t o = 0; o < d.cout; ++o)
    for (std::size_t m = 0; m < d.mid; ++m)
      for (std::size_t ay = 0; ay < d.k2; ++ay)
        for (std::size_t ax = 0; ax < d.k2; ++ax) {
          const double s = second.at(o, m, ay, ax);
          for (std::size_t u = 0; u < d.k1; ++u)
            for (std::size_t v = 0; v < d.k1; ++v) {
              a((o * d.kt + ay + u) * d.kt + ax + v, (m * d.k1 + u) * d.k1 + v) = s;
            }
        }
  return a;
}

// Rows (i, p, q), cols (m, a, b): compose(first, second) restricted to one
// output channel is A * vec(second[o]).
MatrixXd second_step_matrix(const Tensor& first, const Dims& d) {
  MatrixXd a = MatrixXd::Zero(d.cin * d.kt * d.kt, d.mid * d.k2 * d.k2);
  for (std::size_t m = 0; m < d.mid; ++m)
    for (std::size_t i = 0; i < d.cin; ++i)
      for (std::size_t u = 0; u < d.k1; ++u)
        for (std::size_t v = 0; v < d.k1; ++v) {
          const double f = first.at(m, i, u, v);
          for (std::size_t ay = 0; ay < d.k2; ++ay)
            for (std::size_t ax = 0; ax < d.k2; ++ax) {
              a((i * d.kt + ay + u) * d.kt + ax + v, (m * d.k2 + ay) * d.k2 + ax) = f;
            }
        }
  return a;
}

// Dense Jacobian of vec(compose(first, second)) with respect to
// [vec(first), vec(second)], rows in (o, i, p, q) order.
MatrixXd joint_jacobian(const Tensor& first, const Tensor& second, const Dims& d) {
  const std::size_t kk = d.kt * d.kt, n_first = first.size();
  MatrixXd j = MatrixXd::Zero(d.cout * d.cin * kk, n_first + second.size());
  for (std::size_t o = 0; o < d.cout; ++o)
    for (std::size_t i = 0; i < d.cin; ++i)
      for (std::size_t m = 0; m < d.mid; ++m)
        for (std::size_t a = 0; a < d.k2; ++a)
          for (std::size_t b = 0; b < d.k2; ++b)
            for (std::size_t u = 0; u < d.k1; ++u)
              for (std::size_t v = 0; v < d.k1; ++v) {
                const std::size_t row = (o * d.cin + i) * kk + (a + u) * d.kt + b + v;
                j(row, ((m * d.cin + i) * d.k1 + u) * d.k1 + v) += second.at(o, m, a, b);
                j(row, n_first + ((o * d.mid + m) * d.k2 + a) * d.k2 + b) +=
                    first.at(m, i, u, v);
              }
  return j;
}

// Joint second-order refinement is used when the dense normal matrix is cheap.
bool joint_refinement_affordable(const Dims& d) {
  const double cols = static_cast<double>(d.mid * (d.cin * d.k1 * d.k1 + d.cout * d.k2 * d.k2));
  const double rows = static_cast<double>(d.cout * d.cin * d.kt * d.kt);
  return cols * cols * rows <= 1e9;
}

}  // namespace

void FactorizationProblem::validate() const {
  if (target.rank() != 4 || target.dim(2) != target.dim(3)) {
    throw MorphError("factorization target must be a square 4D kernel, got " +
                     shape_to_string(target.shape()));
  }
  if (mid_channels == 0 || k1 == 0 || k2 == 0) {
    throw MorphError("factor kernel sizes and intermediate channels must be positive");
  }
  if (config.max_iters == 0) throw MorphError("solver needs max_iters >= 1");
  const std::size_t k = target.dim(2), kt = effective_kernel_size(k1, k2);
  if (kt < k) {
    throw MorphError("effective kernel " + std::to_string(k1) + "+" + std::to_string(k2) +
                     "-1=" + std::to_string(kt) + " is smaller than target kernel " +
                     std::to_string(k));
  }
  if ((kt - k) % 2 != 0) {
    throw MorphError("effective kernel " + std::to_string(kt) + " and target kernel " +
                     std::to_string(k) + " differ by an odd amount; cannot pad symmetrically");
  }
  const auto cond =
      check_morph_condition(target.dim(1), target.dim(0), mid_channels, k1, k2);
  if (!cond.holds) {
    throw MorphError("morph condition fails: max(" + std::to_string(cond.lhs_first) + ", " +
                     std::to_string(cond.lhs_second) + ") < " + std::to_string(cond.rhs));
  }
}

Tensor zero_pad_kernel(const Tensor& kernel, std::size_t size) {
  const std::size_t k = kernel.dim(2);
  if (size < k || (size - k) % 2 != 0) {
    throw ShapeError("cannot pad kernel of size " + std::to_string(k) + " symmetrically to " +
                     std::to_string(size));
  }
  const std::size_t off = (size - k) / 2;
  const std::size_t co = kernel.dim(0), ci = kernel.dim(1);
  std::vector<double> out(co * ci * size * size, 0.0);
  for (std::size_t o = 0; o < co; ++o)
    for (std::size_t i = 0; i < ci; ++i)
      for (std::size_t y = 0; y < k; ++y)
        for (std::size_t x = 0; x < k; ++x)
          out[((o * ci + i) * size + y + off) * size + x + off] = kernel.at(o, i, y, x);
  return Tensor({co, ci, size, size}, std::move(out), kernel.dtype());
}

FactorizationResult solve_kernel_factorization(const FactorizationProblem& problem) {
  problem.validate();
  const Dims d{problem.target.dim(1), problem.target.dim(0), problem.mid_channels,
               problem.k1,            problem.k2,            effective_kernel_size(problem.k1,
                                                                                   problem.k2)};
  const Tensor padded = zero_pad_kernel(problem.target, d.kt);
  const double target_norm = frobenius_norm(padded);
  const double scale = target_norm > 0.0 ? target_norm : 1.0;

  // Right-hand sides for both half-steps; each holds every target entry once.
  const std::size_t kk = d.kt * d.kt;
  MatrixXd rhs_first(d.cout * kk, d.cin);
  MatrixXd rhs_second(d.cin * kk, d.cout);
  for (std::size_t o = 0; o < d.cout; ++o)
    for (std::size_t i = 0; i < d.cin; ++i)
      for (std::size_t j = 0; j < kk; ++j) {
        const double g = padded[(o * d.cin + i) * kk + j];
        rhs_first(o * kk + j, i) = g;
        rhs_second(i * kk + j, o) = g;
      }

  std::mt19937_64 rng(problem.config.seed);
  std::normal_distribution<double> normal(
      0.0, std::sqrt(2.0 / static_cast<double>(d.mid * d.k2 * d.k2)));
  std::vector<double> second_init(d.cout * d.mid * d.k2 * d.k2);
  for (auto& v : second_init) v = normal(rng);

  Tensor first({d.mid, d.cin, d.k1, d.k1});
  Tensor second({d.cout, d.mid, d.k2, d.k2}, std::move(second_init));

  FactorizationResult best;
  best.residual = std::numeric_limits<double>::infinity();
  auto consider = [&](double residual, std::size_t iter) {
    if (residual < best.residual) {
      best.first = first;
      best.second = second;
      best.residual = residual;
    }
    best.iterations = iter;
    best.converged = best.residual <= problem.config.tolerance;
    return best.converged;
  };

  // Residual of an arbitrary iterate, for the extrapolation step.
  auto residual_of = [&](const Tensor& f, const Tensor& s) {
    const Tensor g = compose_kernels(f, s);
    double sq = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) sq += (g[j] - padded[j]) * (g[j] - padded[j]);
    return std::sqrt(sq) / scale;
  };
  auto extrapolate = [](const Tensor& now, const Tensor& before, double alpha) {
    std::vector<double> out(now.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = now[j] + alpha * (now[j] - before[j]);
    return Tensor(now.shape(), std::move(out));
  };

  // Small problems switch from ALS to damped Gauss-Newton on both factors
  // once ALS has had a few sweeps to find the basin.
  const bool joint = joint_refinement_affordable(d);
  const std::size_t als_sweeps =
      joint ? std::min<std::size_t>(25, problem.config.max_iters) : problem.config.max_iters;

  Tensor prev_first, prev_second;
  double alpha = 1.0;
  for (std::size_t iter = 1; iter <= als_sweeps && !best.converged; ++iter) {
    {
      const MatrixXd a = first_step_matrix(second, d);
      const MatrixXd x = ridge_solve(a, rhs_first, problem.config.ridge);
      std::vector<double> f(d.mid * d.cin * d.k1 * d.k1);
      const std::size_t kk1 = d.k1 * d.k1;
      for (std::size_t m = 0; m < d.mid; ++m)
        for (std::size_t i = 0; i < d.cin; ++i)
          for (std::size_t j = 0; j < kk1; ++j) f[(m * d.cin + i) * kk1 + j] = x(m * kk1 + j, i);
      first = Tensor(first.shape(), std::move(f));
      if (consider((a * x - rhs_first).norm() / scale, iter)) break;
    }
    double swept = 0.0;
    {
      const MatrixXd a = second_step_matrix(first, d);
      const MatrixXd x = ridge_solve(a, rhs_second, problem.config.ridge);
      std::vector<double> s(d.cout * d.mid * d.k2 * d.k2);
      const std::size_t kk2 = d.k2 * d.k2;
      for (std::size_t o = 0; o < d.cout; ++o)
        for (std::size_t m = 0; m < d.mid; ++m)
          for (std::size_t j = 0; j < kk2; ++j) s[(o * d.mid + m) * kk2 + j] = x(m * kk2 + j, o);
      second = Tensor(second.shape(), std::move(s));
      swept = (a * x - rhs_second).norm() / scale;
      if (consider(swept, iter)) break;
    }
    // ALS crawls along shallow valleys; step further along the last sweep's
    // direction while that keeps paying off.
    const Tensor swept_first = first, swept_second = second;
    if (prev_first.size() > 0) {
      Tensor f = extrapolate(first, prev_first, alpha), s = extrapolate(second, prev_second, alpha);
      const double r = residual_of(f, s);
      if (r < swept) {
        first = std::move(f);
        second = std::move(s);
        alpha = std::min(alpha * 1.5, 64.0);
        if (consider(r, iter)) break;
      } else {
        alpha = std::max(alpha / 2.0, 1.0);
      }
    }
    prev_first = swept_first;
    prev_second = swept_second;
  }

  if (joint && !best.converged) {
    first = best.first;
    second = best.second;
    double current = best.residual, lambda = 1e-3;
    for (std::size_t iter = als_sweeps + 1; iter <= problem.config.max_iters; ++iter) {
      const MatrixXd j = joint_jacobian(first, second, d);
      const Tensor g = compose_kernels(first, second);
      Eigen::VectorXd r(g.size());
      for (std::size_t k = 0; k < g.size(); ++k) r[Eigen::Index(k)] = g[k] - padded[k];
      MatrixXd normal = MatrixXd::Zero(j.cols(), j.cols());
      normal.selfadjointView<Eigen::Lower>().rankUpdate(j.transpose());
      const Eigen::VectorXd grad = j.transpose() * r;
      const double mean_diag = normal.diagonal().mean();
      // Retry with heavier damping until the step helps.
      bool improved = false;
      for (int attempt = 0; attempt < 8 && !improved; ++attempt) {
        MatrixXd damped = normal;
        damped.diagonal().array() += lambda * mean_diag;
        const Eigen::VectorXd step =
            Eigen::LDLT<MatrixXd, Eigen::Lower>(damped).solve(-grad);
        std::vector<double> f(first.data().begin(), first.data().end());
        std::vector<double> sv(second.data().begin(), second.data().end());
        for (std::size_t k = 0; k < f.size(); ++k) f[k] += step[Eigen::Index(k)];
        for (std::size_t k = 0; k < sv.size(); ++k) sv[k] += step[Eigen::Index(f.size() + k)];
        Tensor tf(first.shape(), std::move(f)), ts(second.shape(), std::move(sv));
        const double r_new = residual_of(tf, ts);
        if (r_new < current) {
          first = std::move(tf);
          second = std::move(ts);
          current = r_new;
          lambda = std::max(lambda / 3.0, 1e-15);
          improved = true;
        } else {
          lambda *= 4.0;
        }
      }
      if (consider(current, iter) || !improved) break;
    }
  }
  return best;
}

}  // namespace netmorph
