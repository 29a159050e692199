#include "coag2d/potential.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>
#include <unsupported/Eigen/IterativeSolvers>

namespace coag2d {

namespace {

constexpr double kPi = std::numbers::pi;

// Antiderivative of log|(x, y)| in both variables.
double F(double x, double y) {
  double s = 0.0;
  const double r2 = x * x + y * y;
  if (r2 == 0.0) return 0.0;
  if (x != 0.0 && y != 0.0) s += x * y * (0.5 * std::log(r2) - 1.5);
  if (x != 0.0) s += 0.5 * x * x * std::atan(y / x);
  if (y != 0.0) s += 0.5 * y * y * std::atan(x / y);
  return s;
}

}  // namespace

double log_cell_integral(double x0, double x1, double y0, double y1) {
  return F(x1, y1) - F(x0, y1) - F(x1, y0) + F(x0, y0);
}

double log_self_cell_closed_form(double s) {
  return 4.0 * s * s * (std::log(s) + 0.5 * std::log(2.0) - 1.5 + kPi / 4.0);
}

LogKernelWeights::LogKernelWeights(double hq, int n) : hq_(hq), n_(n) {
  if (!(hq > 0) || n < 1) throw ValidationError("log kernel table needs hq > 0 and n >= 1");
  table_.resize(std::size_t(n) * std::size_t(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double x0 = (i - 0.5) * hq, y0 = (j - 0.5) * hq;
      table_[std::size_t(i) * n + j] =
          i == 0 && j == 0 ? log_self_cell_closed_form(0.5 * hq)
                           : log_cell_integral(x0, x0 + hq, y0, y0 + hq);
    }
}

std::vector<double> cell_average_kernel(const KernelSpec& ks, const PotentialGridSpec& g) {
  using Q = boost::math::quadrature::gauss<double, 16>;
  const auto& xs = Q::abscissa();
  const auto& ws = Q::weights();
  std::vector<double> nodes, weights;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    nodes.push_back(xs[k]);
    weights.push_back(ws[k]);
    if (xs[k] != 0.0) {
      nodes.push_back(-xs[k]);
      weights.push_back(ws[k]);
    }
  }
  const double hq = 2.0 * g.R / g.n;
  std::vector<double> out(std::size_t(g.n) * g.n, 0.0);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const double cx = -g.R + (i + 0.5) * hq, cy = -g.R + (j + 0.5) * hq;
      // Cells wholly outside the support carry nothing.
      const double nx = std::max(0.0, std::abs(cx) - 0.5 * hq);
      const double ny = std::max(0.0, std::abs(cy) - 0.5 * hq);
      if (nx * nx + ny * ny >= ks.support_radius * ks.support_radius) continue;
      double s = 0.0;
      for (std::size_t a = 0; a < nodes.size(); ++a)
        for (std::size_t b = 0; b < nodes.size(); ++b)
          s += weights[a] * weights[b] *
               ks.V({cx + 0.5 * hq * nodes[a], cy + 0.5 * hq * nodes[b]});
      out[std::size_t(j) * g.n + i] = 0.25 * s;
    }
  return out;
}

RescaledSystem assemble_rescaled_system(const KernelSpec& ks, double tau, double eps,
                                        const PotentialGridSpec& grid) {
  if (!(tau >= 0)) throw ValidationError("tau must be nonnegative");
  if (grid.n < 1 || !(grid.R > 0)) throw ValidationError("bad potential grid");
  if (grid.R < ks.support_radius) throw ValidationError("potential grid must cover the support of V");
  const double hq = 2.0 * grid.R / grid.n;
  if (2.0 * ks.support_radius / hq < 32.0)
    throw ValidationError("potential grid too coarse: need >= 32 cells across the support of V");
  RescaledSystem sys;
  sys.grid = grid;
  sys.hq = hq;
  sys.tau = tau;
  sys.eps = eps;
  sys.log_eps = log_scale(eps);
  sys.vbar = cell_average_kernel(ks, grid);
  for (int c = 0; c < grid.n * grid.n; ++c)
    if (sys.vbar[std::size_t(c)] > 0) sys.active.push_back(c);
  const auto M = Eigen::Index(sys.active.size());
  const LogKernelWeights W(hq, grid.n);
  const double k = tau / (2 * kPi), invL = 1.0 / sys.log_eps, h2 = hq * hq;
  sys.A.resize(M, M);
  sys.b.resize(M);
  for (Eigen::Index a = 0; a < M; ++a) {
    const int ia = sys.active[std::size_t(a)] % grid.n, ja = sys.active[std::size_t(a)] / grid.n;
    double rhs = 0.0;
    for (Eigen::Index c = 0; c < M; ++c) {
      const int cell = sys.active[std::size_t(c)];
      const int ic = cell % grid.n, jc = cell / grid.n;
      const double K = k * sys.vbar[std::size_t(cell)] * (-h2 + W(ic - ia, jc - ja) * invL);
      sys.A(a, c) = (a == c ? 1.0 : 0.0) - K;
      rhs += K;
    }
    sys.b(a) = rhs;
  }
  return sys;
}

Vec2 PotentialGrid::node(int i, int j) const {
  return {-grid.R + (i + 0.5) * hq, -grid.R + (j + 0.5) * hq};
}

double PotentialGrid::evaluate(Vec2 x) const {
  const double k = tau / (2 * kPi), invL = 1.0 / log_eps, h2 = hq * hq;
  double s = 0.0;
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i) {
      const double v = vbar[std::size_t(j) * grid.n + i];
      if (v == 0.0) continue;
      const Vec2 c = node(i, j) - x;
      const double Wc = log_cell_integral(c.x - 0.5 * hq, c.x + 0.5 * hq, c.y - 0.5 * hq, c.y + 0.5 * hq);
      s += (at(i, j) + 1.0) * v * (-h2 + Wc * invL);
    }
  return k * s;
}

double PotentialGrid::center_value() const { return evaluate({0.0, 0.0}); }

PotentialGrid solve_w(const RescaledSystem& sys) {
  PotentialGrid out;
  out.grid = sys.grid;
  out.hq = sys.hq;
  out.tau = sys.tau;
  out.eps = sys.eps;
  out.log_eps = sys.log_eps;
  out.vbar = sys.vbar;
  const int n = sys.grid.n;
  out.w.assign(std::size_t(n) * n, 0.0);

  Eigen::VectorXd x;
  if (n <= 64) {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(sys.A);
    x = lu.solve(sys.b);
    for (int it = 0; it < 3; ++it) {
      const Eigen::VectorXd r = sys.b - sys.A * x;
      if (r.lpNorm<Eigen::Infinity>() <= 1e-13) break;
      x += lu.solve(r);
    }
  } else {
    Eigen::GMRES<Eigen::MatrixXd, Eigen::IdentityPreconditioner> gmres(sys.A);
    gmres.setTolerance(1e-14);
    gmres.setMaxIterations(2000);
    gmres.set_restart(200);
    x = gmres.solve(sys.b);
  }
  out.residual = (sys.A * x - sys.b).lpNorm<Eigen::Infinity>();
  if (!(out.residual <= 1e-10))
    throw SolverError("potential solve did not converge", out.residual);
  for (std::size_t a = 0; a < sys.active.size(); ++a) out.w[std::size_t(sys.active[a])] = x(Eigen::Index(a));

  // Inactive nodes by the same discrete operator.
  const LogKernelWeights W(sys.hq, n);
  const double k = sys.tau / (2 * kPi), invL = 1.0 / sys.log_eps, h2 = sys.hq * sys.hq;
  std::vector<char> is_active(std::size_t(n) * n, 0);
  for (int c : sys.active) is_active[std::size_t(c)] = 1;
  for (int cell = 0; cell < n * n; ++cell) {
    if (is_active[std::size_t(cell)]) continue;
    const int ia = cell % n, ja = cell / n;
    double s = 0.0;
    for (std::size_t a = 0; a < sys.active.size(); ++a) {
      const int c = sys.active[a];
      s += (x(Eigen::Index(a)) + 1.0) * sys.vbar[std::size_t(c)] * (-h2 + W(c % n - ia, c / n - ja) * invL);
    }
    out.w[std::size_t(cell)] = k * s;
  }
  return out;
}

double lambda_eps(const PotentialGrid& w) {
  double s = 0.0;
  for (std::size_t c = 0; c < w.w.size(); ++c) s += (w.w[c] + 1.0) * w.vbar[c];
  return w.tau / (2 * kPi) * s * w.hq * w.hq;
}

double effective_rate_factor(const PotentialGrid& w) {
  double s = 0.0, v = 0.0;
  for (std::size_t c = 0; c < w.w.size(); ++c) {
    s += (w.w[c] + 1.0) * w.vbar[c];
    v += w.vbar[c];
  }
  return s / v;
}

double richardson_extrapolate(std::span<const double> inv_log, std::span<const double> values,
                              int points) {
  if (inv_log.size() != values.size()) throw ValidationError("extrapolation inputs differ in length");
  if (points < 1 || std::size_t(points) > values.size())
    throw ValidationError("not enough samples to extrapolate");
  const std::size_t off = values.size() - std::size_t(points);
  double s = 0.0;
  for (int i = 0; i < points; ++i) {
    double li = 1.0;
    const double xi = inv_log[off + i];
    for (int j = 0; j < points; ++j)
      if (j != i) li *= (0.0 - inv_log[off + j]) / (xi - inv_log[off + j]);
    s += li * values[off + i];
  }
  return s;
}

double PotentialLimitReport::expected_center() const { return -tau / (2 * kPi + tau); }
double PotentialLimitReport::expected_lambda() const { return tau / (2 * kPi + tau); }
double PotentialLimitReport::expected_factor() const { return 2 * kPi / (2 * kPi + tau); }

PotentialLimitReport verify_potential_limit(const KernelSpec& ks, double tau,
                                            const std::vector<double>& eps_list, double k_radius,
                                            const PotentialGridSpec& grid) {
  if (eps_list.size() < 2) throw ValidationError("need at least two eps values");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw ValidationError("eps list must be decreasing");
  PotentialLimitReport rep;
  rep.tau = tau;
  const double limit = rep.expected_center();
  std::vector<double> x, centers, lambdas, factors, errs;
  for (double eps : eps_list) {
    const auto sys = assemble_rescaled_system(ks, tau, eps, grid);
    const auto w = solve_w(sys);
    ConvergenceRow row;
    row.tau = tau;
    row.eps = eps;
    row.log_eps = w.log_eps;
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i)
        if (w.node(i, j).norm() <= k_radius)
          row.sup_error = std::max(row.sup_error, std::abs(w.at(i, j) - limit));
    row.lambda_eps = lambda_eps(w);
    row.factor = effective_rate_factor(w);
    row.center = w.center_value();
    rep.rows.push_back(row);
    x.push_back(1.0 / w.log_eps);
    centers.push_back(row.center);
    lambdas.push_back(row.lambda_eps);
    factors.push_back(row.factor);
    errs.push_back(row.sup_error);
  }
  const int pts = std::min<int>(3, int(x.size()));
  rep.center_limit = richardson_extrapolate(x, centers, pts);
  rep.lambda_limit = richardson_extrapolate(x, lambdas, pts);
  rep.factor_limit = richardson_extrapolate(x, factors, pts);

  double sxy = 0.0, sxx = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * errs[i];
    sxx += x[i] * x[i];
    mean += errs[i];
  }
  mean /= double(x.size());
  rep.fit_c = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ss_res += std::pow(errs[i] - rep.fit_c * x[i], 2);
    ss_tot += std::pow(errs[i] - mean, 2);
  }
  rep.fit_r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : (ss_res == 0 ? 1.0 : 0.0);
  for (std::size_t i = 1; i < errs.size(); ++i)
    if (!(errs[i] < errs[i - 1])) rep.sup_error_decreasing = false;
  return rep;
}

}  // namespace coag2d
