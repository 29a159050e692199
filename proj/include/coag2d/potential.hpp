#pragma once

// Rescaled logarithmic potential equation
//   w(x) = (tau / 2 pi) int (-1 + log|x - z| / |log eps|) (w(z) + 1) V(z) dz,
// discretized by piecewise-constant collocation on a uniform grid with exact
// cell integrals of log|x - z|.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coag2d/model.hpp"

namespace coag2d {

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct PotentialGridSpec {
  /// Half-width of [-R, R]^2; must cover the support of V.
  double R = 1.0;
  /// Cells per side.
  int n = 64;
};

/// int over [x0,x1] x [y0,y1] of log|y| dy
double log_cell_integral(double x0, double x1, double y0, double y1);
/// int over [-s,s]^2 of log|y| dy = (2s)^2 (log s + log(2)/2 - 3/2 + pi/4)
double log_self_cell_closed_form(double s);

/// W(di, dj) = integral of log|y| over the cell offset by (di, dj) cells from the
/// evaluation node. Depends only on |di|, |dj|.
class LogKernelWeights {
 public:
  LogKernelWeights(double hq, int n);
  double operator()(int di, int dj) const {
    return table_[std::size_t(std::abs(di)) * std::size_t(n_) + std::size_t(std::abs(dj))];
  }
  double hq() const { return hq_; }

 private:
  double hq_;
  int n_;
  std::vector<double> table_;
};

/// Cell-averaged V on the grid.
std::vector<double> cell_average_kernel(const KernelSpec& ks, const PotentialGridSpec& g);

struct RescaledSystem {
  PotentialGridSpec grid;
  double hq = 0.0;
  double tau = 0.0;
  double eps = 0.0;
  double log_eps = 0.0;
  /// Cells where the averaged V is positive; the unknowns live there.
  std::vector<int> active;
  std::vector<double> vbar;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

RescaledSystem assemble_rescaled_system(const KernelSpec& ks, double tau, double eps,
                                        const PotentialGridSpec& grid);

struct PotentialGrid {
  PotentialGridSpec grid;
  double hq = 0.0;
  double tau = 0.0;
  double eps = 0.0;
  double log_eps = 0.0;
  std::vector<double> vbar;
  /// Nodal w at every cell centre (active cells solved, others by the Nystrom formula).
  std::vector<double> w;
  double residual = 0.0;

  Vec2 node(int i, int j) const;
  double at(int i, int j) const { return w[std::size_t(j) * grid.n + i]; }
  /// w at an arbitrary point through the Nystrom formula.
  double evaluate(Vec2 x) const;
  /// Nystrom value of w at the origin.
  double center_value() const;
};

PotentialGrid solve_w(const RescaledSystem& sys);

/// Lambda_eps = (tau / 2 pi) int (w + 1) V
double lambda_eps(const PotentialGrid& w);
/// V-weighted mean of (w + 1)
double effective_rate_factor(const PotentialGrid& w);

/// Value at 1/|log eps| = 0 of the polynomial through the last `points` samples
/// (2 gives linear, 3 quadratic extrapolation).
double richardson_extrapolate(std::span<const double> inv_log, std::span<const double> values,
                              int points = 3);

struct ConvergenceRow {
  double tau = 0.0;
  double eps = 0.0;
  double log_eps = 0.0;
  double sup_error = 0.0;
  double lambda_eps = 0.0;
  double factor = 0.0;
  double center = 0.0;
};

struct PotentialLimitReport {
  double tau = 0.0;
  std::vector<ConvergenceRow> rows;
  double center_limit = 0.0;
  double lambda_limit = 0.0;
  double factor_limit = 0.0;
  /// e(eps) ~ c / |log eps|, least squares through the origin.
  double fit_c = 0.0;
  double fit_r2 = 0.0;
  bool sup_error_decreasing = true;

  double expected_center() const;
  double expected_lambda() const;
  double expected_factor() const;
};

/// Solves along a decreasing eps list, measures sup_{|x| <= k_radius} |w + tau/(2 pi + tau)|
/// and extrapolates the centre value, Lambda and the rate factor to eps -> 0.
PotentialLimitReport verify_potential_limit(const KernelSpec& ks, double tau,
                                            const std::vector<double>& eps_list,
                                            double k_radius,
                                            const PotentialGridSpec& grid = {});

}  // namespace coag2d
