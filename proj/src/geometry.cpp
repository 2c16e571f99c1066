#include "bbmtraps/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "bbmtraps/quadrature.hpp"

namespace bbmtraps {

double sphere_surface_area(int n) {
  if (n < 1) throw std::domain_error("sphere_surface_area: n must be >= 1");
  return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

double sin_power_integral(int n, double theta) {
  if (n < 0) throw std::domain_error("sin_power_integral: negative power");
  if (n == 0) return theta;
  if (n == 1) return 1.0 - std::cos(theta);
  // I_n = ((n-1) I_{n-2} - cos sin^{n-1}) / n, built upward.
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  double prev = theta;             // I_0
  double cur = 1.0 - c;            // I_1
  double sin_km1 = s;              // sin^{k-1}, starting at k = 2
  for (int k = 2; k <= n; ++k) {
    const double next = ((k - 1) * prev - c * sin_km1) / k;
    prev = cur;
    cur = next;
    sin_km1 *= s;
  }
  return cur;
}

namespace {

/// Half-angle of the cap cut out of the r-sphere about the origin by B_R(e).
inline double cap_angle(double r, double R) {
  const double x = (r * r + 1.0 - R * R) / (2.0 * r);
  return std::acos(std::clamp(x, -1.0, 1.0));
}

}  // namespace

double g_unit(int d, double R, double rel_tol) {
  if (R < 0.0) throw std::domain_error("g_unit: negative radius");
  if (d < 2) throw std::domain_error("g_unit: requires d >= 2 (d = 1 is linear)");
  if (R == 0.0) return 0.0;

  const double s_d = sphere_surface_area(d);
  const double s_dm1 = sphere_surface_area(d - 1);
  // Spheres of radius r < R - 1 around the singular point lie inside the
  // ball and contribute their full angular mass s_d per unit r.
  const double base = s_d * std::max(R - 1.0, 0.0);

  const double lo = std::abs(R - 1.0);
  const double hi = R + 1.0;
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  // r = mid + half sin(phi) removes the sqrt endpoint behaviour of the cap angle.
  const auto integrand = [&](double phi) {
    const double r = mid + half * std::sin(phi);
    return sin_power_integral(d - 2, cap_angle(r, R)) * half * std::cos(phi);
  };
  const double cap_part =
      s_dm1 * GaussKronrod::integrate(integrand, -M_PI_2, M_PI_2, rel_tol).value;
  return base + cap_part;
}

double g(int d, double r, double b, double rel_tol) {
  if (r < 0.0 || b < 0.0) throw std::domain_error("g: negative argument");
  if (d < 1) throw std::domain_error("g: dimension must be >= 1");
  if (d == 1) return 2.0 * r;
  if (r == 0.0) return 0.0;
  if (b == 0.0) return sphere_surface_area(d) * r;
  return b * g_unit(d, r / b, rel_tol);
}

double g_prime(int d, double R, double rel_tol) {
  if (R < 0.0) throw std::domain_error("g_prime: negative radius");
  if (d == 1) return 2.0;
  if (d < 1) throw std::domain_error("g_prime: dimension must be >= 1");
  if (std::abs(R - 1.0) <= 1e-3)
    throw std::domain_error("g_prime: divergent at R = 1 (requires |R-1| > 1e-3)");
  if (R == 0.0) return 0.0;

  const double s_dm1 = sphere_surface_area(d - 1);
  const auto integrand = [&](double theta) {
    const double w = R * R + 2.0 * R * std::cos(theta) + 1.0;
    return std::pow(std::sin(theta), d - 2) * std::pow(w, -0.5 * (d - 1));
  };
  // The integrand peaks near theta = pi when R is close to 1; split there so
  // the adaptive rule concentrates panels on the peak.
  const double split = M_PI - std::min(0.5, 10.0 * std::abs(R - 1.0));
  const double part1 = GaussKronrod::integrate(integrand, 0.0, split, rel_tol).value;
  const double part2 = GaussKronrod::integrate(integrand, split, M_PI, rel_tol).value;
  return std::pow(R, d - 1) * s_dm1 * (part1 + part2);
}

double g_hat(int d, double R, double rel_tol) {
  if (d < 2) throw std::domain_error("g_hat: requires d >= 2");
  return sphere_surface_area(d) * R - g_unit(d, R, rel_tol);
}

GHatMax g_hat_max(int d, double r_max, double rel_tol) {
  if (d < 2) throw std::domain_error("g_hat_max: requires d >= 2");
  const double inner_tol = std::min(rel_tol, 1e-9);
  const auto f = [&](double r) { return g_hat(d, r, inner_tol); };

  for (int round = 0; round < 8; ++round) {
    // Golden-section maximization on (0, r_max]; ghat is unimodal there.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 1e-9, b = r_max;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > 1e-10 * r_max) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = f(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = f(x1);
      }
    }
    const double argmax = 0.5 * (a + b);
    if (argmax < 0.99 * r_max) return {f(argmax), argmax};
    r_max *= 2.0;  // maximizer suspiciously close to the bracket end
  }
  throw std::runtime_error("g_hat_max: no interior maximizer found");
}

double m_d_constant(int d, double m) {
  if (d < 2) throw std::domain_error("m_d_constant: defined for d >= 2 only");
  if (m <= 0.0) throw std::domain_error("m_d_constant: requires m > 0");
  return g_hat_max(d).value / (2.0 * sphere_surface_area(d) * m);
}

double nu_ball(const IntensityModel& model, double center_dist, double radius) {
  return model.l * g(model.dim, radius, center_dist);
}

GeometryTable::GeometryTable(int dim, double quad_tol)
    : dim_(dim), s_d_(sphere_surface_area(dim)), quad_tol_(quad_tol) {
  if (dim < 1) throw std::domain_error("GeometryTable: dim must be >= 1");
}

double GeometryTable::g(double R) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(R);
  if (it == cache_.end()) {
    it = cache_.emplace(R, std::make_pair(bbmtraps::g(dim_, R, 1.0, quad_tol_),
                                          std::nan(""))).first;
  } else if (std::isnan(it->second.first)) {
    it->second.first = bbmtraps::g(dim_, R, 1.0, quad_tol_);
  }
  return it->second.first;
}

double GeometryTable::g_prime(double R) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(R);
  if (it == cache_.end() || std::isnan(it->second.second)) {
    const double gp = bbmtraps::g_prime(dim_, R, quad_tol_);
    if (it == cache_.end())
      it = cache_.emplace(R, std::make_pair(std::nan(""), gp)).first;
    else
      it->second.second = gp;
  }
  return it->second.second;
}

void GeometryTable::warm(const std::vector<double>& grid) {
  for (double R : grid) {
    g(R);
    if (dim_ >= 2 && std::abs(R - 1.0) > 1e-3) g_prime(R);
  }
}

std::map<double, std::pair<double, double>> GeometryTable::snapshot() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_;
}

}  // namespace bbmtraps
