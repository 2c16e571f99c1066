#pragma once

#include <map>
#include <mutex>
#include <stdexcept>

namespace bbmtraps {

/// Surface area of the unit sphere in R^n: 2 pi^{n/2} / Gamma(n/2).
double sphere_surface_area(int n);

/// int_0^theta sin^n(x) dx, exact via the standard reduction.
double sin_power_integral(int n, double theta);

/**
 * Radial potential of the unit-offset ball for d >= 2:
 * g_d(R) = integral over B_R(0) of |x + e|^{-(d-1)} dx, with e a unit vector.
 *
 * Evaluated through the cap-angle form: spheres of radius r about the
 * singular point meet B_R(e)... equivalently, after shifting, the integral
 * collapses to a smooth one-dimensional integral of spherical-cap areas, so
 * the (rho, theta) = (1, pi) singularity of the raw integrand never appears.
 */
double g_unit(int d, double R, double rel_tol = 1e-7);

/**
 * Two-argument g_d(r, b) = integral over B_r(0) of |x + b e|^{-(d-1)} dx.
 * Scaling g_d(rt, bt) = t g_d(r, b) reduces b > 0 to b * g_unit(d, r/b);
 * b = 0 means the ball is centred on the singularity and g = s_d r;
 * d = 1 is exactly 2r for every b.
 */
double g(int d, double r, double b, double rel_tol = 1e-7);

/**
 * Derivative of g_unit via the boundary-shell representation
 * g_d'(R) = R^{d-1} s_{d-1} int_0^pi sin^{d-2}(t) (R^2 + 2R cos t + 1)^{-(d-1)/2} dt.
 * Diverges at R = 1; callers must stay |R - 1| > 1e-3.
 */
double g_prime(int d, double R, double rel_tol = 1e-7);

/// ghat_d(R) = s_d R - g_d(R); positive on (0, inf) and -> 0 at both ends.
double g_hat(int d, double R, double rel_tol = 1e-7);

struct GHatMax {
  double value;
  double argmax;
};

/// Maximizes ghat_d over (0, r_max] by golden section, doubling the bracket
/// if the argmax lands within 1% of its end.
GHatMax g_hat_max(int d, double r_max = 50.0, double rel_tol = 1e-9);

/// M_d = max ghat_d / (2 s_d m); requires d >= 2 and m > 0.
double m_d_constant(int d, double m);

/// Trap intensity with density l |x|^{-(d-1)} (constant l when d = 1).
struct IntensityModel {
  int dim;
  double l;

  IntensityModel(int dim_, double l_) : dim(dim_), l(l_) {
    if (dim < 1) throw std::domain_error("IntensityModel: dim must be >= 1");
    if (l < 0.0) throw std::domain_error("IntensityModel: negative intensity");
  }
};

/// Measure of a ball under the model density; exact: l * g_d(radius, center_dist).
double nu_ball(const IntensityModel& model, double center_dist, double radius);

/**
 * Memoizing evaluation table for (g_d, g_d') at a fixed dimension.
 * Warm it on a grid and read concurrently, or let it fill lazily under
 * its own lock.
 */
class GeometryTable {
 public:
  explicit GeometryTable(int dim, double quad_tol = 1e-7);

  int dim() const { return dim_; }
  double surface_area() const { return s_d_; }
  double quad_tol() const { return quad_tol_; }

  double g(double R) const;
  double g_prime(double R) const;  // throws on |R - 1| <= 1e-3 for d >= 2

  void warm(const std::vector<double>& grid);
  std::map<double, std::pair<double, double>> snapshot() const;

 private:
  int dim_;
  double s_d_;
  double quad_tol_;
  mutable std::mutex mutex_;
  mutable std::map<double, std::pair<double, double>> cache_;  // R -> (g, g')
};

}  // namespace bbmtraps
