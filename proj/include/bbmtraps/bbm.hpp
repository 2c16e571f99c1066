#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bbmtraps/offspring.hpp"
#include "bbmtraps/rng.hpp"

namespace bbmtraps {

enum class Conditioning { plain, decomposed };

struct SimConfig {
  explicit SimConfig(OffspringLaw law_) : law(std::move(law_)) {}

  int d = 1;
  double beta = 1.0;
  OffspringLaw law;
  double horizon = 1.0;
  double dt = 1e-2;
  std::size_t max_particles = 1'000'000;
  std::uint64_t seed = 0;
  Conditioning conditioning = Conditioning::plain;
  bool record_paths = true;  // population-only experiments switch this off

  void validate() const;
};

enum class ParticleType { skeleton, doomed };

/**
 * One particle of a realization. The path holds positions at the global
 * dt-grid times inside the lifetime plus the exact birth and death points;
 * death_time is +inf while the particle is alive at the horizon.
 */
struct ParticleRecord {
  int id = -1;
  int parent = -1;
  ParticleType type = ParticleType::skeleton;
  double birth_time = 0.0;
  double death_time = 0.0;
  std::vector<double> path_times;
  Eigen::MatrixXd path;  // one row per sample, d columns
};

struct BbmRealization {
  int dim = 1;
  double horizon = 0.0;
  Conditioning conditioning = Conditioning::plain;
  bool has_paths = true;
  bool extinct_by_horizon = false;
  bool truncated = false;
  std::vector<ParticleRecord> particles;

  /// |Z(t)|: born by t and not yet dead (children count at the branch instant,
  /// the parent does not).
  int population_at(double t) const;
  int skeleton_population_at(double t) const;  // decomposed mode only

  std::string to_json() const;
};

BbmRealization simulate(const SimConfig& config, RngStream& rng);

/**
 * Plain simulation accepted with probability 1 - q^{|Z(horizon)|}, which is
 * exactly P(non-extinction | everything seen up to the horizon). Used to
 * cross-validate the decomposed construction.
 */
BbmRealization simulate_conditioned_rejection(const SimConfig& config, RngStream& rng,
                                              int* attempts = nullptr);

struct SpeedStats {
  double t = 0.0;
  double m_radius = 0.0;  // radius of the smallest origin-centred ball holding the range
  int population = 0;
  int skeleton_population = 0;
};

SpeedStats speed_stats(const BbmRealization& realization, double t);

struct SpeedEnsemble {
  double t = 0.0;
  int runs = 0;
  int truncated = 0;
  double mean = 0.0;  // of M(t)/t over non-truncated runs
  double q10 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q90 = 0.0;
  double mean_population = 0.0;
};

/// Ensemble of M(t)/t at each requested time, one simulation per run.
std::vector<SpeedEnsemble> speed_ensemble(const SimConfig& config,
                                          const std::vector<double>& ts, int n_runs);

/// Reflection-principle tail of the running maximum of 1-d Brownian motion:
/// sqrt(2/pi) int_{a/sqrt(t)}^inf e^{-y^2/2} dy.
double brownian_sup_tail_d1(double a, double t);

/// Monte Carlo estimate of the same tail over discretized paths.
double mc_brownian_sup_tail_d1(double a, double t, int n_paths, double dt, std::uint64_t seed);

/// Laplace transform E exp(-lambda^2 theta_c / 2) = 2 / (1 + cosh(lambda c))
/// of the first time the Brownian range reaches c.
double range_hit_laplace(double lambda, double c);

/// Monte Carlo estimate of P(range of B over [0,t] >= c) on discretized paths.
double mc_range_hit(double c, double t, int n_paths, double dt, std::uint64_t seed);

struct TailCheck {
  double empirical_freq = 0.0;
  double bound = 0.0;  // e^{-delta t}
  double std_error = 0.0;
};

/// Frequency of |Z(t)| > e^{(m beta + delta) t} against the Markov bound.
TailCheck population_tail_check(const SimConfig& config, double delta, double t, int n_runs);

/// Number of skeleton particles alive at t; decomposed realizations only.
int skeleton_count(const BbmRealization& realization, double t);

struct SkeletonDecay {
  double probability = 0.0;
  double std_error = 0.0;
  double log_rate = 0.0;  // -(1/t) log probability
};

/// Estimates P(|Z*(eta t)| <= K) with t = config.horizon.
SkeletonDecay skeleton_decay_experiment(const SimConfig& config, double eta, int K, int n_runs);

}  // namespace bbmtraps
