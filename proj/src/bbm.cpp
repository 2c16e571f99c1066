#include "bbmtraps/bbm.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "bbmtraps/parallel.hpp"
#include "bbmtraps/stats.hpp"

namespace bbmtraps {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void SimConfig::validate() const {
  if (d < 1) throw std::domain_error("SimConfig: d must be >= 1");
  if (beta <= 0.0) throw std::domain_error("SimConfig: beta must be positive");
  if (horizon < 0.0) throw std::domain_error("SimConfig: negative horizon");
  if (dt <= 0.0) throw std::domain_error("SimConfig: dt must be positive");
  if (max_particles == 0) throw std::domain_error("SimConfig: max_particles must be positive");
}

int BbmRealization::population_at(double t) const {
  if (t < 0.0 || t > horizon) throw std::domain_error("population_at: t outside [0, horizon]");
  int n = 0;
  for (const auto& p : particles) n += (p.birth_time <= t && t < p.death_time) ? 1 : 0;
  return n;
}

int BbmRealization::skeleton_population_at(double t) const {
  if (conditioning != Conditioning::decomposed)
    throw std::domain_error("skeleton_population_at: skeleton identity unknown in plain mode");
  if (t < 0.0 || t > horizon) throw std::domain_error("skeleton_population_at: t outside range");
  int n = 0;
  for (const auto& p : particles)
    n += (p.type == ParticleType::skeleton && p.birth_time <= t && t < p.death_time) ? 1 : 0;
  return n;
}

std::string BbmRealization::to_json() const {
  nlohmann::json doc;
  doc["dim"] = dim;
  doc["horizon"] = horizon;
  doc["conditioning"] = conditioning == Conditioning::plain ? "plain" : "decomposed";
  doc["extinct_by_horizon"] = extinct_by_horizon;
  doc["truncated"] = truncated;
  auto arr = nlohmann::json::array();
  for (const auto& p : particles) {
    nlohmann::json rec;
    rec["id"] = p.id;
    rec["parent"] = p.parent;
    rec["type"] = p.type == ParticleType::skeleton ? "skeleton" : "doomed";
    rec["birth"] = p.birth_time;
    rec["death"] = std::isfinite(p.death_time) ? nlohmann::json(p.death_time)
                                               : nlohmann::json("alive");
    rec["times"] = p.path_times;
    std::vector<double> flat(p.path.data(), p.path.data() + p.path.size());
    rec["positions"] = flat;  // column-major flat dump, shape (samples, dim)
    arr.push_back(std::move(rec));
  }
  doc["particles"] = std::move(arr);
  return doc.dump();
}

namespace {

struct Pending {
  int parent;
  ParticleType type;
  double birth_time;
  Eigen::VectorXd birth_pos;
};

/// Samples one Brownian lifetime path on the global dt grid.
void sample_path(ParticleRecord& rec, const Eigen::VectorXd& start, double t0, double t1,
                 double dt, int d, bool record, RngStream& rng, Eigen::VectorXd& end_pos) {
  Eigen::VectorXd pos = start;
  std::vector<double> times;
  std::vector<double> flat;  // row-major (sample, coordinate) buffer
  if (record) {
    const auto estimate = static_cast<std::size_t>((t1 - t0) / dt) + 3;
    times.reserve(estimate);
    flat.reserve(estimate * static_cast<std::size_t>(d));
  }
  const auto push = [&](double tt) {
    times.push_back(tt);
    flat.insert(flat.end(), pos.data(), pos.data() + d);
  };
  if (record) push(t0);
  double t = t0;
  // First grid time strictly after birth.
  double next = (std::floor(t0 / dt) + 1.0) * dt;
  while (next < t1 - 1e-12 * dt) {
    const double sd = std::sqrt(next - t);
    for (int i = 0; i < d; ++i) pos[i] += sd * rng.normal();
    t = next;
    if (record) push(t);
    next += dt;
  }
  if (t1 > t) {
    const double sd = std::sqrt(t1 - t);
    for (int i = 0; i < d; ++i) pos[i] += sd * rng.normal();
    if (record) push(t1);
  }
  end_pos = pos;
  if (record) {
    const auto rows = static_cast<Eigen::Index>(times.size());
    rec.path_times = std::move(times);
    rec.path = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>(flat.data(), rows, d);
  }
}

}  // namespace

BbmRealization simulate(const SimConfig& config, RngStream& rng) {
  config.validate();
  const int d = config.d;

  BbmRealization out;
  out.dim = d;
  out.horizon = config.horizon;
  out.conditioning = config.conditioning;
  out.has_paths = config.record_paths;

  const bool decomposed = config.conditioning == Conditioning::decomposed;
  Decomposition dec{};
  if (decomposed) {
    dec = decompose(config.law);
    if (dec.q_bar <= 0.0)
      throw std::domain_error("simulate: decomposed mode needs a supercritical law");
  }

  std::deque<Pending> queue;
  queue.push_back({-1, ParticleType::skeleton, 0.0, Eigen::VectorXd::Zero(d)});

  while (!queue.empty()) {
    Pending cur = std::move(queue.front());
    queue.pop_front();

    ParticleRecord rec;
    rec.id = static_cast<int>(out.particles.size());
    rec.parent = cur.parent;
    rec.type = cur.type;
    rec.birth_time = cur.birth_time;

    const double lifetime = rng.exponential(config.beta);
    const double death = cur.birth_time + lifetime;
    const bool dies = death <= config.horizon;
    const double end = dies ? death : config.horizon;
    rec.death_time = dies ? death : kInf;

    Eigen::VectorXd end_pos;
    sample_path(rec, cur.birth_pos, cur.birth_time, end, config.dt, d, config.record_paths, rng,
                end_pos);

    if (dies) {
      int n_skel = 0, n_doom = 0;
      if (!decomposed) {
        n_skel = sample_offspring(config.law, rng);  // type tag unused in plain mode
      } else if (cur.type == ParticleType::skeleton) {
        const SkeletonBranch br = sample_skeleton_branch(dec, config.law, rng);
        n_skel = br.n_skeleton;
        n_doom = br.n_doomed;
      } else {
        n_doom = sample_doomed_offspring(dec, config.law, rng);
      }
      const std::size_t want = out.particles.size() + 1 + queue.size() +
                               static_cast<std::size_t>(n_skel + n_doom);
      if (want > config.max_particles) {
        out.truncated = true;  // partial tree: this branch event spawns nothing
      } else {
        for (int i = 0; i < n_skel; ++i)
          queue.push_back({rec.id, ParticleType::skeleton, death, end_pos});
        for (int i = 0; i < n_doom; ++i)
          queue.push_back({rec.id, ParticleType::doomed, death, end_pos});
      }
    }
    out.particles.push_back(std::move(rec));
  }

  out.extinct_by_horizon = out.population_at(config.horizon) == 0;
  return out;
}

BbmRealization simulate_conditioned_rejection(const SimConfig& config, RngStream& rng,
                                              int* attempts) {
  SimConfig plain = config;
  plain.conditioning = Conditioning::plain;
  const Decomposition dec = decompose(config.law);
  if (dec.q_bar <= 0.0)
    throw std::domain_error("simulate_conditioned_rejection: law must be supercritical");
  int tries = 0;
  for (;;) {
    ++tries;
    BbmRealization r = simulate(plain, rng);
    const int n = r.truncated ? 0 : r.population_at(config.horizon);
    // P(non-extinction | state at horizon) = 1 - q^n.
    const double accept = 1.0 - std::pow(dec.q, n);
    if (!r.truncated && rng.uniform() < accept) {
      if (attempts) *attempts = tries;
      return r;
    }
    if (tries > 1'000'000)
      throw std::runtime_error("simulate_conditioned_rejection: acceptance never triggered");
  }
}

SpeedStats speed_stats(const BbmRealization& realization, double t) {
  if (t < 0.0 || t > realization.horizon)
    throw std::domain_error("speed_stats: t outside [0, horizon]");
  if (!realization.has_paths)
    throw std::domain_error("speed_stats: realization recorded without paths");
  SpeedStats st;
  st.t = t;
  double m2 = 0.0;
  for (const auto& p : realization.particles) {
    if (p.birth_time > t) continue;
    for (std::size_t i = 0; i < p.path_times.size(); ++i) {
      if (p.path_times[i] > t) break;
      m2 = std::max(m2, p.path.row(static_cast<Eigen::Index>(i)).squaredNorm());
    }
  }
  st.m_radius = std::sqrt(m2);
  st.population = realization.population_at(t);
  st.skeleton_population = realization.conditioning == Conditioning::decomposed
                               ? realization.skeleton_population_at(t)
                               : 0;
  return st;
}

std::vector<SpeedEnsemble> speed_ensemble(const SimConfig& config,
                                          const std::vector<double>& ts, int n_runs) {
  if (ts.empty() || n_runs <= 0) throw std::invalid_argument("speed_ensemble: empty request");
  for (double t : ts)
    if (t < 0.0 || t > config.horizon)
      throw std::domain_error("speed_ensemble: requested t outside [0, horizon]");

  const std::size_t nt = ts.size();
  std::vector<std::vector<double>> ratios(nt);   // per-time M(t)/t samples
  std::vector<std::vector<double>> pops(nt);
  std::vector<char> truncated(static_cast<std::size_t>(n_runs), 0);
  std::vector<std::vector<double>> run_ratio(static_cast<std::size_t>(n_runs));
  std::vector<std::vector<double>> run_pop(static_cast<std::size_t>(n_runs));

  parallel_for(static_cast<std::size_t>(n_runs), [&](std::size_t run) {
    RngStream rng(config.seed, run);
    const BbmRealization r = simulate(config, rng);
    if (r.truncated) {
      truncated[run] = 1;
      return;
    }
    run_ratio[run].resize(nt);
    run_pop[run].resize(nt);
    for (std::size_t k = 0; k < nt; ++k) {
      const SpeedStats st = speed_stats(r, ts[k]);
      run_ratio[run][k] = ts[k] > 0.0 ? st.m_radius / ts[k] : 0.0;
      run_pop[run][k] = st.population;
    }
  });

  int n_trunc = 0;
  for (std::size_t run = 0; run < static_cast<std::size_t>(n_runs); ++run) {
    if (truncated[run]) {
      ++n_trunc;
      continue;
    }
    for (std::size_t k = 0; k < nt; ++k) {
      ratios[k].push_back(run_ratio[run][k]);
      pops[k].push_back(run_pop[run][k]);
    }
  }

  std::vector<SpeedEnsemble> out(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    SpeedEnsemble& e = out[k];
    e.t = ts[k];
    e.runs = n_runs;
    e.truncated = n_trunc;
    if (ratios[k].empty()) throw std::runtime_error("speed_ensemble: every run truncated");
    e.mean = mean(ratios[k]);
    e.q10 = quantile(ratios[k], 0.10);
    e.q25 = quantile(ratios[k], 0.25);
    e.q50 = quantile(ratios[k], 0.50);
    e.q75 = quantile(ratios[k], 0.75);
    e.q90 = quantile(ratios[k], 0.90);
    e.mean_population = mean(pops[k]);
  }
  return out;
}

double brownian_sup_tail_d1(double a, double t) {
  if (a <= 0.0 || t <= 0.0) throw std::domain_error("brownian_sup_tail_d1: needs a, t > 0");
  return std::erfc(a / std::sqrt(2.0 * t));
}

double mc_brownian_sup_tail_d1(double a, double t, int n_paths, double dt, std::uint64_t seed) {
  if (n_paths <= 0 || dt <= 0.0) throw std::invalid_argument("mc_brownian_sup_tail_d1: bad input");
  const long steps = static_cast<long>(std::ceil(t / dt));
  std::vector<char> hit(static_cast<std::size_t>(n_paths), 0);
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t i) {
    RngStream rng(seed, i);
    double x = 0.0;
    const double sd = std::sqrt(dt);
    for (long s = 0; s < steps; ++s) {
      x += sd * rng.normal();
      if (x >= a) {
        hit[i] = 1;
        return;
      }
    }
  });
  long count = 0;
  for (char h : hit) count += h;
  return static_cast<double>(count) / static_cast<double>(n_paths);
}

double range_hit_laplace(double lambda, double c) {
  if (lambda <= 0.0 || c < 0.0) throw std::domain_error("range_hit_laplace: bad arguments");
  return 2.0 / (1.0 + std::cosh(lambda * c));
}

double mc_range_hit(double c, double t, int n_paths, double dt, std::uint64_t seed) {
  if (n_paths <= 0 || dt <= 0.0 || c <= 0.0 || t <= 0.0)
    throw std::invalid_argument("mc_range_hit: bad input");
  const long steps = static_cast<long>(std::ceil(t / dt));
  std::vector<char> hit(static_cast<std::size_t>(n_paths), 0);
  parallel_for(static_cast<std::size_t>(n_paths), [&](std::size_t i) {
    RngStream rng(seed, i);
    double x = 0.0, lo = 0.0, hi = 0.0;
    const double sd = std::sqrt(dt);
    for (long s = 0; s < steps; ++s) {
      x += sd * rng.normal();
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      if (hi - lo >= c) {
        hit[i] = 1;
        return;
      }
    }
  });
  long count = 0;
  for (char h : hit) count += h;
  return static_cast<double>(count) / static_cast<double>(n_paths);
}

TailCheck population_tail_check(const SimConfig& config, double delta, double t, int n_runs) {
  if (delta <= 0.0 || n_runs <= 0) throw std::invalid_argument("population_tail_check: bad input");
  SimConfig cfg = config;
  cfg.horizon = t;
  cfg.record_paths = false;
  const double m = config.law.mean_minus_one();
  // Threshold e^{(m beta + delta) t}, the form the Markov bound actually controls.
  const double threshold = std::exp((m * config.beta + delta) * t);
  std::vector<char> over(static_cast<std::size_t>(n_runs), 0);
  parallel_for(static_cast<std::size_t>(n_runs), [&](std::size_t i) {
    RngStream rng(cfg.seed, i);
    const BbmRealization r = simulate(cfg, rng);
    over[i] = static_cast<double>(r.population_at(t)) > threshold ? 1 : 0;
  });
  long count = 0;
  for (char h : over) count += h;
  TailCheck out;
  out.empirical_freq = static_cast<double>(count) / static_cast<double>(n_runs);
  out.bound = std::exp(-delta * t);
  out.std_error = binomial_stderr(out.empirical_freq, static_cast<std::size_t>(n_runs));
  return out;
}

int skeleton_count(const BbmRealization& realization, double t) {
  return realization.skeleton_population_at(t);
}

SkeletonDecay skeleton_decay_experiment(const SimConfig& config, double eta, int K, int n_runs) {
  if (config.conditioning != Conditioning::decomposed)
    throw std::domain_error("skeleton_decay_experiment: decomposed mode required");
  if (eta <= 0.0 || eta > 1.0 || K < 1 || n_runs <= 0)
    throw std::invalid_argument("skeleton_decay_experiment: bad input");
  SimConfig cfg = config;
  cfg.horizon = eta * config.horizon;
  cfg.record_paths = false;
  std::vector<char> small(static_cast<std::size_t>(n_runs), 0);
  parallel_for(static_cast<std::size_t>(n_runs), [&](std::size_t i) {
    RngStream rng(cfg.seed, i);
    const BbmRealization r = simulate(cfg, rng);
    small[i] = skeleton_count(r, cfg.horizon) <= K ? 1 : 0;
  });
  long count = 0;
  for (char h : small) count += h;
  SkeletonDecay out;
  out.probability = static_cast<double>(count) / static_cast<double>(n_runs);
  out.std_error = binomial_stderr(out.probability, static_cast<std::size_t>(n_runs));
  out.log_rate = out.probability > 0.0 ? -std::log(out.probability) / config.horizon
                                       : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace bbmtraps
