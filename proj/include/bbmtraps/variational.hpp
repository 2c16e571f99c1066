#pragma once

#include <string>
#include <utility>

#include "bbmtraps/offspring.hpp"

namespace bbmtraps {

/// Inputs of the survival rate problem. alpha and m come from the offspring
/// law (alpha = 1 - f'(q), m = mu - 1) and must describe a supercritical law.
struct RateParams {
  int d;
  double beta;
  double l;
  double alpha;
  double m;
};

RateParams make_rate_params(int d, double beta, double l, const OffspringLaw& law);

enum class Regime { subcritical_l, supercritical_l, critical };

std::string to_string(Regime r);

struct RateSolution {
  double I = 0.0;
  double eta_star = 0.0;
  double c_star = 0.0;
  double u_star = 0.0;       // sqrt(2 beta m)(1 - eta*)/c*; NaN on the boundary
  double v_star = 0.0;       // c*/(sqrt(2 beta m) eta*); NaN on the boundary
  double l_cr = 0.0;
  double l_cr_star = 0.0;
  double gamma_d = 0.0;      // alpha for d = 1
  double M_d = 0.0;          // NaN for d = 1
  double stationarity_residual = 0.0;  // max |r1|, |r2| at (u*, v*); 0 on boundary
  double identity_gap = 0.0;           // |I - beta(alpha - m v*^2)| when interior
  Regime regime = Regime::subcritical_l;
};

/// l*_cr = (1/s_d) sqrt(beta / (2m)).
double l_cr_star(const RateParams& p);

/**
 * Objective G_d(eta, c) = beta alpha eta + c^2/(2 eta) + l g_d(sqrt(2 beta m)(1-eta), c)
 * on [0,1] x [0, sqrt(2 beta)], with the boundary convention G(0,0) = l s_d sqrt(2 beta m)
 * and G(0, c) = +inf for c > 0.
 */
double G(const RateParams& p, double eta, double c);

/// Closed-form solution for d = 1 (boundary minimizers only).
RateSolution solve_d1(const RateParams& p);

struct SolveOptions {
  int grid_n = 200;
  double polish_tol = 1e-8;  // function-value convergence of the local stage
  double quad_tol = 1e-9;
};

/**
 * Coarse grid over the (eta, c) box followed by Nelder-Mead polish and,
 * when the minimizer is interior, a Newton solve of the stationarity system
 * in the transformed coordinates (u, v).
 */
RateSolution solve_general(const RateParams& p, const SolveOptions& opt = {});

/// Crossover factor gamma_d of the closed-form route; requires d >= 2.
double gamma_d(const RateParams& p);

/// Crossover intensity: gamma_d * l*_cr for d >= 2, alpha * l*_cr for d = 1.
double l_cr(const RateParams& p);

/// Residuals (r1, r2) of the stationarity system at transformed coordinates (u, v).
std::pair<double, double> stationarity_residual(const RateParams& p, double u, double v);

}  // namespace bbmtraps
