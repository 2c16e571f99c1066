#include "bbmtraps/variational.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "bbmtraps/geometry.hpp"

namespace bbmtraps {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate(const RateParams& p) {
  if (p.d < 1) throw std::domain_error("RateParams: d must be >= 1");
  if (p.beta <= 0.0) throw std::domain_error("RateParams: beta must be positive");
  if (p.l < 0.0) throw std::domain_error("RateParams: negative intensity");
  if (p.m <= 0.0) throw std::domain_error("RateParams: requires m > 0");
  if (p.alpha <= 0.0 || p.alpha > 1.0) throw std::domain_error("RateParams: alpha outside (0,1]");
}
}  // namespace

RateParams make_rate_params(int d, double beta, double l, const OffspringLaw& law) {
  const Decomposition dec = decompose(law);
  RateParams p{d, beta, l, dec.alpha, dec.m};
  validate(p);
  return p;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::subcritical_l: return "subcritical-l";
    case Regime::supercritical_l: return "supercritical-l";
    case Regime::critical: return "critical";
  }
  return "unknown";
}

double l_cr_star(const RateParams& p) {
  validate(p);
  return std::sqrt(p.beta / (2.0 * p.m)) / sphere_surface_area(p.d);
}

double G(const RateParams& p, double eta, double c) {
  validate(p);
  const double c_max = std::sqrt(2.0 * p.beta);
  if (eta < 0.0 || eta > 1.0) throw std::domain_error("G: eta outside [0,1]");
  if (c < 0.0 || c > c_max) throw std::domain_error("G: c outside [0, sqrt(2 beta)]");
  const double speed = std::sqrt(2.0 * p.beta * p.m);
  if (eta == 0.0) {
    if (c > 0.0) return kInf;
    return p.l * sphere_surface_area(p.d) * speed;
  }
  return p.beta * p.alpha * eta + c * c / (2.0 * eta) + p.l * g(p.d, speed * (1.0 - eta), c);
}

std::pair<double, double> stationarity_residual(const RateParams& p, double u, double v) {
  validate(p);
  if (u <= 0.0 || v <= 0.0) throw std::domain_error("stationarity_residual: requires u, v > 0");
  const double speed = std::sqrt(2.0 * p.beta * p.m);
  const double gu = p.d == 1 ? 2.0 * u : g_unit(p.d, u, 1e-10);
  const double gpu = g_prime(p.d, u, 1e-10);  // throws on |u-1| <= 1e-3 for d >= 2
  const double r1 = p.beta * p.alpha - p.beta * p.m * v * v - p.l * speed * gpu;
  const double r2 = speed * v + p.l * (gu - u * gpu);
  return {r1, r2};
}

double gamma_d(const RateParams& p) {
  validate(p);
  if (p.d < 2) throw std::domain_error("gamma_d: defined for d >= 2 (use alpha for d = 1)");
  const double md = m_d_constant(p.d, p.m);
  const double gamma =
      (-1.0 + std::sqrt(1.0 + 4.0 * p.m * p.alpha * md * md)) / (2.0 * p.m * md * md);
  // Defining relation of the crossover: sqrt((alpha - gamma)/m) = gamma M_d.
  const double relation = std::sqrt((p.alpha - gamma) / p.m) - gamma * md;
  if (std::abs(relation) > 1e-8)
    throw std::runtime_error("gamma_d: crossover relation residual above 1e-8");
  return gamma;
}

double l_cr(const RateParams& p) {
  validate(p);
  return (p.d == 1 ? p.alpha : gamma_d(p)) * l_cr_star(p);
}

namespace {

Regime classify(double l, double l_cr_val) {
  const double tol = 1e-9 * std::max(l_cr_val, 1e-30);
  if (std::abs(l - l_cr_val) <= tol) return Regime::critical;
  return l < l_cr_val ? Regime::subcritical_l : Regime::supercritical_l;
}

void fill_crossover_fields(const RateParams& p, RateSolution& sol) {
  sol.l_cr_star = l_cr_star(p);
  if (p.d == 1) {
    sol.gamma_d = p.alpha;
    sol.M_d = kNaN;
    sol.l_cr = p.alpha * sol.l_cr_star;
  } else {
    sol.M_d = m_d_constant(p.d, p.m);
    sol.gamma_d = gamma_d(p);
    sol.l_cr = sol.gamma_d * sol.l_cr_star;
  }
}

/// Nelder-Mead on the (eta, c) box; out-of-box points evaluate to +inf.
struct NelderMead {
  const RateParams& p;
  double c_max;
  double tol;

  double eval(const Eigen::Vector2d& x) const {
    if (x[0] < 0.0 || x[0] > 1.0 || x[1] < 0.0 || x[1] > c_max) return kInf;
    return G(p, x[0], x[1]);
  }

  std::pair<Eigen::Vector2d, double> run(Eigen::Vector2d start, double scale) const {
    std::array<Eigen::Vector2d, 3> v;
    std::array<double, 3> f;
    v[0] = start;
    for (int i = 1; i < 3; ++i) {  // axis steps, flipped when they leave the box
      Eigen::Vector2d dir = Eigen::Vector2d::Zero();
      dir[i - 1] = scale;
      Eigen::Vector2d cand = start + dir;
      if (cand[0] > 1.0 || cand[1] > c_max) cand = start - dir;
      cand[0] = std::clamp(cand[0], 0.0, 1.0);
      cand[1] = std::clamp(cand[1], 0.0, c_max);
      v[i] = cand;
    }
    for (int i = 0; i < 3; ++i) f[i] = eval(v[i]);

    for (int iter = 0; iter < 600; ++iter) {
      std::array<int, 3> order{0, 1, 2};
      std::sort(order.begin(), order.end(), [&](int a, int b) { return f[a] < f[b]; });
      const int best = order[0], midi = order[1], worst = order[2];
      if (std::isfinite(f[worst]) && f[worst] - f[best] < tol * (1.0 + std::abs(f[best])))
        break;

      const Eigen::Vector2d centroid = 0.5 * (v[best] + v[midi]);
      const Eigen::Vector2d refl = centroid + (centroid - v[worst]);
      const double f_refl = eval(refl);
      if (f_refl < f[best]) {
        const Eigen::Vector2d expd = centroid + 2.0 * (centroid - v[worst]);
        const double f_exp = eval(expd);
        if (f_exp < f_refl) {
          v[worst] = expd;
          f[worst] = f_exp;
        } else {
          v[worst] = refl;
          f[worst] = f_refl;
        }
      } else if (f_refl < f[midi]) {
        v[worst] = refl;
        f[worst] = f_refl;
      } else {
        const Eigen::Vector2d contr = centroid + 0.5 * (v[worst] - centroid);
        const double f_con = eval(contr);
        if (f_con < f[worst]) {
          v[worst] = contr;
          f[worst] = f_con;
        } else {
          for (int i : {midi, worst}) {
            v[i] = v[best] + 0.5 * (v[i] - v[best]);
            f[i] = eval(v[i]);
          }
        }
      }
    }
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (f[i] < f[best]) best = i;
    return {v[best], f[best]};
  }
};

/// Newton iteration on the stationarity system in (u, v); returns false when
/// it leaves the admissible region or fails to converge.
bool newton_stationarity(const RateParams& p, double& u, double& v) {
  for (int iter = 0; iter < 40; ++iter) {
    if (!(u > 1e-12) || !(v > 1e-12) || std::abs(u - 1.0) <= 2e-3) return false;
    const auto [r1, r2] = stationarity_residual(p, u, v);
    if (std::abs(r1) < 1e-11 && std::abs(r2) < 1e-11) return true;
    const double hu = 1e-6 * std::max(u, 1.0);
    const double hv = 1e-6 * std::max(v, 1.0);
    if (std::abs(u + hu - 1.0) <= 1.5e-3 || std::abs(u - hu - 1.0) <= 1.5e-3) return false;
    const auto [r1u, r2u] = stationarity_residual(p, u + hu, v);
    const auto [r1mu, r2mu] = stationarity_residual(p, u - hu, v);
    const auto [r1v, r2v] = stationarity_residual(p, u, v + hv);
    Eigen::Matrix2d jac;
    jac << (r1u - r1mu) / (2.0 * hu), (r1v - r1) / hv,
           (r2u - r2mu) / (2.0 * hu), (r2v - r2) / hv;
    const Eigen::Vector2d step = jac.fullPivLu().solve(Eigen::Vector2d(r1, r2));
    if (!step.allFinite()) return false;
    double damp = 1.0;
    while (damp > 1e-4 && (u - damp * step[0] <= 0.0 || v - damp * step[1] <= 0.0))
      damp *= 0.5;
    u -= damp * step[0];
    v -= damp * step[1];
  }
  const auto [r1, r2] = stationarity_residual(p, u, v);
  return std::abs(r1) < 1e-9 && std::abs(r2) < 1e-9;
}

}  // namespace

RateSolution solve_d1(const RateParams& p) {
  validate(p);
  if (p.d != 1) throw std::domain_error("solve_d1: d must be 1");
  RateSolution sol;
  fill_crossover_fields(p, sol);
  sol.u_star = kNaN;
  sol.v_star = kNaN;
  sol.regime = classify(p.l, sol.l_cr);
  switch (sol.regime) {
    case Regime::subcritical_l:
      sol.I = p.beta * p.l / sol.l_cr_star;
      sol.eta_star = 0.0;
      sol.c_star = 0.0;
      break;
    case Regime::supercritical_l:
      sol.I = p.beta * p.alpha;
      sol.eta_star = 1.0;
      sol.c_star = 0.0;
      break;
    case Regime::critical:
      // Both boundary points attain the same value; report the smaller one.
      sol.I = p.beta * p.alpha;
      sol.eta_star = 0.0;
      sol.c_star = 0.0;
      break;
  }
  return sol;
}

RateSolution solve_general(const RateParams& p, const SolveOptions& opt) {
  validate(p);
  const double c_max = std::sqrt(2.0 * p.beta);
  const double speed = std::sqrt(2.0 * p.beta * p.m);
  const int n = opt.grid_n;

  // Stage 1: coarse grid, eta = 0 contributing only the (0, 0) corner.
  Eigen::MatrixXd values(n, n);
  for (int i = 0; i < n; ++i) {
    const double eta = static_cast<double>(i) / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double c = c_max * static_cast<double>(j) / (n - 1);
      values(i, j) = (i == 0 && j > 0) ? kInf : G(p, eta, c);
    }
  }

  // Candidate cells: the global best plus well-separated runners-up, always
  // including both boundary minim candidates (0,0) and (1,0).
  struct Cell {
    int i, j;
    double f;
  };
  std::vector<Cell> cells;
  cells.reserve(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::isfinite(values(i, j))) cells.push_back({i, j, values(i, j)});
  std::sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.f < b.f; });
  std::vector<Cell> candidates;
  for (const Cell& c : cells) {
    bool close = false;
    for (const Cell& kept : candidates)
      close |= std::abs(kept.i - c.i) + std::abs(kept.j - c.j) < n / 20;
    if (!close) candidates.push_back(c);
    if (candidates.size() >= 6) break;
  }

  const double corner00 = G(p, 0.0, 0.0);
  const double corner10 = G(p, 1.0, 0.0);

  // Stage 2: Nelder-Mead polish around each interior candidate.
  NelderMead nm{p, c_max, opt.polish_tol};
  Eigen::Vector2d best_x(0.0, 0.0);
  double best_f = corner00;
  if (corner10 < best_f) {
    best_f = corner10;
    best_x = {1.0, 0.0};
  }
  for (const Cell& cand : candidates) {
    Eigen::Vector2d start(static_cast<double>(cand.i) / (n - 1),
                          c_max * static_cast<double>(cand.j) / (n - 1));
    auto [x, f] = nm.run(start, 1.5 / (n - 1));
    if (f < best_f) {
      best_f = f;
      best_x = x;
    }
  }

  RateSolution sol;
  fill_crossover_fields(p, sol);
  sol.regime = classify(p.l, sol.l_cr);
  sol.u_star = kNaN;
  sol.v_star = kNaN;

  const bool interior = best_x[0] > 1e-7 && best_x[0] < 1.0 - 1e-7 && best_x[1] > 1e-7 * c_max &&
                        best_x[1] < c_max * (1.0 - 1e-7);
  if (interior && p.d >= 2) {
    // Stage 3: Newton on the stationarity system pins the interior minimizer
    // far below the Nelder-Mead function tolerance.
    double u = speed * (1.0 - best_x[0]) / best_x[1];
    double v = best_x[1] / (speed * best_x[0]);
    double u_n = u, v_n = v;
    if (newton_stationarity(p, u_n, v_n)) {
      const double eta_n = 1.0 / (1.0 + u_n * v_n);
      const double c_n = speed * eta_n * v_n;
      if (eta_n > 0.0 && eta_n < 1.0 && c_n > 0.0 && c_n < c_max) {
        const double f_n = G(p, eta_n, c_n);
        if (f_n <= best_f + 1e-9) {
          best_x = {eta_n, c_n};
          best_f = f_n;
        }
      }
    }
  }

  sol.eta_star = best_x[0];
  sol.c_star = best_x[1];
  sol.I = best_f;

  if (interior) {
    sol.u_star = speed * (1.0 - sol.eta_star) / sol.c_star;
    sol.v_star = sol.c_star / (speed * sol.eta_star);
    const auto [r1, r2] = stationarity_residual(p, sol.u_star, sol.v_star);
    sol.stationarity_residual = std::max(std::abs(r1), std::abs(r2));
    sol.identity_gap = std::abs(sol.I - p.beta * (p.alpha - p.m * sol.v_star * sol.v_star));
  } else {
    // Boundary minimum: keep the exact corner values.
    if (best_x[0] < 0.5) {
      sol.eta_star = 0.0;
      sol.c_star = 0.0;
      sol.I = corner00;
    } else {
      sol.eta_star = 1.0;
      sol.c_star = best_x[1] <= 1e-7 * c_max ? 0.0 : best_x[1];
      sol.I = sol.c_star == 0.0 ? corner10 : best_f;
    }
  }
  return sol;
}

}  // namespace bbmtraps
