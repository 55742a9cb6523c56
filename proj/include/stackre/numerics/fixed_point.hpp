#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stackre/errors.hpp"
#include "stackre/numerics/config.hpp"

namespace stackre::numerics {

struct FixedPointReport {
  std::vector<double> root;
  double residual_norm = 0.0;
  int iterations = 0;
  int residual_evaluations = 0;
  int newton_steps = 0;
  bool singular_jacobian_seen = false;
};

namespace detail {

inline double sup_norm(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace detail

/// Solves residual(x) = 0 for x in R^n.
///
/// Damped Picard iteration x <- x - damping * residual(x) runs until the step
/// drops below cfg.newton_switch or a Picard step would increase the residual;
/// from then on Newton steps with a central
/// difference Jacobian are tried first and kept only if they reduce the sup
/// norm of the residual (after up to four halvings). A singular Jacobian falls
/// back to Picard; if the budget then runs out SingularJacobian is raised
/// instead of MaxIterations.
template <class Residual>
FixedPointReport solve_fixed_point_report(const Residual& residual, std::vector<double> x,
                                          const SolverConfig& cfg) {
  cfg.validate();
  const std::size_t n = x.size();
  FixedPointReport report;
  auto eval = [&](const std::vector<double>& at) {
    ++report.residual_evaluations;
    std::vector<double> r = residual(at);
    if (r.size() != n) throw ValidationError("residual dimension mismatch");
    for (double v : r) {
      if (!std::isfinite(v)) throw NonFinite("fixed-point residual is not finite");
    }
    return r;
  };

  std::vector<double> r = eval(x);
  double norm = detail::sup_norm(r);
  bool newton_on = false;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    if (norm <= cfg.tolerance) {
      report.root = std::move(x);
      report.residual_norm = norm;
      report.iterations = it;
      return report;
    }
    bool advanced = false;
    if (newton_on) {
      Eigen::MatrixXd jac(n, n);
      for (std::size_t j = 0; j < n; ++j) {
        const double h = cfg.fd_step * (1.0 + std::abs(x[j]));
        auto xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        const auto rp = eval(xp);
        const auto rm = eval(xm);
        for (std::size_t i = 0; i < n; ++i) jac(i, j) = (rp[i] - rm[i]) / (2.0 * h);
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
      if (lu.isInvertible() && std::abs(lu.determinant()) > 1e-300) {
        Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(r.data(), n);
        Eigen::VectorXd step = lu.solve(rhs);
        double t = 1.0;
        for (int half = 0; half < 5 && !advanced; ++half, t *= 0.5) {
          std::vector<double> trial(n);
          for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] - t * step(i);
          std::vector<double> rt;
          try {
            rt = eval(trial);
          } catch (const error&) {
            continue;
          }
          const double nt = detail::sup_norm(rt);
          if (nt < norm) {
            x = std::move(trial);
            r = std::move(rt);
            norm = nt;
            advanced = true;
            ++report.newton_steps;
          }
        }
      } else {
        report.singular_jacobian_seen = true;
      }
    }
    if (!advanced) {
      double step_size = 0.0;
      auto trial = x;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = cfg.damping * r[i];
        trial[i] -= d;
        step_size = std::max(step_size, std::abs(d));
      }
      auto rt = eval(trial);
      const double nt = detail::sup_norm(rt);
      if (nt > norm && !newton_on) {
        newton_on = true;  // Picard is expanding here; retry from x with Newton
        continue;
      }
      x = std::move(trial);
      r = std::move(rt);
      norm = nt;
      if (step_size < cfg.newton_switch) newton_on = true;
    }
  }
  if (norm <= cfg.tolerance) {
    report.root = std::move(x);
    report.residual_norm = norm;
    report.iterations = cfg.max_iterations;
    return report;
  }
  const std::string msg = "residual norm " + std::to_string(norm) + " after " +
                          std::to_string(cfg.max_iterations) + " iterations";
  if (report.singular_jacobian_seen) throw SingularJacobian(msg);
  throw MaxIterations(msg);
}

template <class Residual>
std::vector<double> solve_fixed_point_system(const Residual& residual, std::vector<double> x0,
                                             const SolverConfig& cfg) {
  return solve_fixed_point_report(residual, std::move(x0), cfg).root;
}

}  // namespace stackre::numerics
