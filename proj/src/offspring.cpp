#include "bbmtraps/offspring.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace bbmtraps {

namespace {
constexpr double kProbSumTol = 1e-12;
}

OffspringLaw::OffspringLaw(Eigen::VectorXd probs) : probs_(std::move(probs)) {
  if (probs_.size() == 0) throw std::invalid_argument("OffspringLaw: empty support");
  if ((probs_.array() < 0.0).any())
    throw std::invalid_argument("OffspringLaw: negative probability");
  if (std::abs(probs_.sum() - 1.0) > kProbSumTol)
    throw std::invalid_argument("OffspringLaw: probabilities must sum to 1");
  cumulative_.resize(probs_.size());
  double acc = 0.0;
  for (Eigen::Index j = 0; j < probs_.size(); ++j) {
    acc += probs_[j];
    cumulative_[j] = acc;
  }
  cumulative_[probs_.size() - 1] = 1.0;
}

double OffspringLaw::mean() const {
  double mu = 0.0;
  for (Eigen::Index j = 1; j < probs_.size(); ++j) mu += static_cast<double>(j) * probs_[j];
  return mu;
}

double eval_pgf(const OffspringLaw& law, double s, int order) {
  if (s < 0.0 || s > 1.0) throw std::domain_error("eval_pgf: s outside [0,1]");
  if (order < 0) throw std::domain_error("eval_pgf: negative derivative order");
  const Eigen::VectorXd& p = law.probs();
  const int jmax = law.max_children();
  if (order > jmax) return 0.0;
  // Horner evaluation of the exact derivative polynomial
  // sum_{j >= order} lambda_j j!/(j-order)! s^{j-order}.
  double acc = 0.0;
  for (int j = jmax; j >= order; --j) {
    double coeff = p[j];
    for (int i = 0; i < order; ++i) coeff *= static_cast<double>(j - i);
    acc = acc * s + coeff;
  }
  return acc;
}

double extinction_prob(const OffspringLaw& law) {
  const double lambda0 = law.prob(0);
  if (lambda0 == 0.0) return 0.0;
  const double mu = law.mean();
  if (mu <= 1.0) return 1.0;

  // Supercritical with lambda(0) > 0: unique root of f(s) - s in (0, 1).
  const auto h = [&](double s) { return eval_pgf(law, s, 0) - s; };
  double lo = 0.0;  // h(0) = lambda0 > 0
  double hi = 1.0 - 1e-6;
  double shrink = 1e-6;
  while (h(hi) >= 0.0 && shrink > 1e-15) {
    shrink *= 0.1;
    hi = 1.0 - shrink;
  }
  if (h(hi) >= 0.0) return 1.0;  // root indistinguishable from 1
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    (h(mid) > 0.0 ? lo : hi) = mid;
  }
  // Two Newton polish steps on the bisection result.
  double q = 0.5 * (lo + hi);
  for (int it = 0; it < 2; ++it) {
    const double deriv = eval_pgf(law, q, 1) - 1.0;
    if (deriv == 0.0) break;
    q -= h(q) / deriv;
  }
  q = std::clamp(q, 0.0, 1.0);
  if (std::abs(h(q)) > 1e-12)
    throw std::runtime_error("extinction_prob: fixed-point residual above 1e-12");
  return q;
}

Decomposition decompose(const OffspringLaw& law) {
  Decomposition dec;
  dec.q = extinction_prob(law);
  dec.q_bar = 1.0 - dec.q;
  dec.mu = law.mean();
  dec.m = dec.mu - 1.0;
  dec.kappa = eval_pgf(law, dec.q, 1);
  dec.k = dec.kappa - 1.0;
  dec.alpha = 1.0 - dec.kappa;
  return dec;
}

double doomed_pgf(const Decomposition& dec, const OffspringLaw& law, double s) {
  if (dec.q <= 0.0) throw std::domain_error("doomed_pgf: q = 0, no doomed lineage law");
  if (s < 0.0 || s > 1.0) throw std::domain_error("doomed_pgf: s outside [0,1]");
  return eval_pgf(law, dec.q * s, 0) / dec.q;
}

double skeleton_pgf(const Decomposition& dec, const OffspringLaw& law, double s) {
  if (dec.q_bar <= 0.0) throw std::domain_error("skeleton_pgf: q = 1, no skeleton");
  if (s < 0.0 || s > 1.0) throw std::domain_error("skeleton_pgf: s outside [0,1]");
  return (eval_pgf(law, dec.q + dec.q_bar * s, 0) - dec.q) / dec.q_bar;
}

OffspringLaw skeleton_law(const Decomposition& dec, const OffspringLaw& law) {
  if (dec.q_bar <= 0.0) throw std::domain_error("skeleton_law: q = 1, no skeleton");
  const Eigen::VectorXd& p = law.probs();
  const int jmax = law.max_children();
  // Binomial expansion of f(q + q_bar s): coefficient of s^i.
  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(jmax + 1);
  for (int j = 0; j <= jmax; ++j) {
    if (p[j] == 0.0) continue;
    double binom = 1.0;  // C(j, i) built up over i
    for (int i = 0; i <= j; ++i) {
      coeff[i] += p[j] * binom * std::pow(dec.q, j - i) * std::pow(dec.q_bar, i);
      binom *= static_cast<double>(j - i) / static_cast<double>(i + 1);
    }
  }
  coeff[0] = 0.0;  // exact: f(q) - q cancels
  coeff /= dec.q_bar;
  const double drift = coeff.sum() - 1.0;
  coeff[coeff.size() - 1] -= drift;  // absorb rounding into the top coefficient
  return OffspringLaw(coeff);
}

RateScaledLaw canonical_skeleton(const Decomposition& dec, const OffspringLaw& law) {
  if (dec.alpha <= 0.0) throw std::domain_error("canonical_skeleton: alpha = 0");
  OffspringLaw star = skeleton_law(dec, law);
  Eigen::VectorXd coeff = star.probs();
  // f*'(0) equals f'(q) exactly, so removing kappa s leaves no mass on 1.
  coeff[1] = 0.0;
  coeff /= dec.alpha;
  const double drift = coeff.sum() - 1.0;
  coeff[coeff.size() - 1] -= drift;
  return {dec.alpha, OffspringLaw(coeff)};
}

RateScaledLaw canonicalize(const OffspringLaw& law) {
  const double lambda1 = law.prob(1);
  if (lambda1 >= 1.0) throw std::domain_error("canonicalize: law is concentrated on 1");
  Eigen::VectorXd coeff = law.probs();
  if (coeff.size() >= 2) coeff[1] = 0.0;
  coeff /= (1.0 - lambda1);
  return {1.0 - lambda1, OffspringLaw(coeff)};
}

double skeleton_total_offspring_pgf(const Decomposition& dec, const OffspringLaw& law, double s) {
  if (dec.q <= 0.0 || dec.q >= 1.0)
    throw std::domain_error("skeleton_total_offspring_pgf: requires q in (0,1)");
  if (s < 0.0 || s > 1.0) throw std::domain_error("skeleton_total_offspring_pgf: s outside [0,1]");
  return (eval_pgf(law, s, 0) - eval_pgf(law, dec.q * s, 0)) / dec.q_bar;
}

double expected_doomed_per_skeleton(const Decomposition& dec, const OffspringLaw& law) {
  if (dec.q_bar <= 0.0) throw std::domain_error("expected_doomed_per_skeleton: q = 1");
  (void)law;
  return (dec.mu - dec.kappa) * dec.q / dec.q_bar;
}

Eigen::Matrix2d mean_matrix(const Decomposition& dec, double beta, double t) {
  if (beta <= 0.0) throw std::domain_error("mean_matrix: beta must be positive");
  if (t < 0.0) throw std::domain_error("mean_matrix: negative time");
  if (dec.q_bar <= 0.0) throw std::domain_error("mean_matrix: q = 1, no skeleton type");
  const double em = std::exp(beta * t * dec.m);
  const double ek = std::exp(beta * t * dec.k);
  Eigen::Matrix2d a;
  a << em, (dec.q / dec.q_bar) * (em - ek), 0.0, ek;
  return a;
}

Eigen::Matrix2d modified_mean_matrix(const Decomposition& dec, double beta, double t) {
  if (beta <= 0.0) throw std::domain_error("modified_mean_matrix: beta must be positive");
  if (t < 0.0) throw std::domain_error("modified_mean_matrix: negative time");
  if (dec.q_bar <= 0.0) throw std::domain_error("modified_mean_matrix: q = 1");
  const double em = std::exp(beta * t * dec.m);
  Eigen::Matrix2d a;
  a << em, (dec.q / dec.q_bar) * (dec.m - dec.k) * beta * t * em, 0.0, em;
  return a;
}

int sample_offspring(const OffspringLaw& law, RngStream& rng) {
  const double u = rng.uniform();
  const Eigen::VectorXd& cdf = law.cumulative();
  for (Eigen::Index j = 0; j < cdf.size(); ++j)
    if (u < cdf[j]) return static_cast<int>(j);
  return law.max_children();
}

SkeletonBranch sample_skeleton_branch(const Decomposition& dec, const OffspringLaw& law,
                                      RngStream& rng) {
  if (dec.q_bar <= 0.0) throw std::domain_error("sample_skeleton_branch: q = 1");
  for (;;) {
    const int total = sample_offspring(law, rng);
    int n_skeleton = 0;
    for (int i = 0; i < total; ++i)
      if (rng.bernoulli(dec.q_bar)) ++n_skeleton;
    if (n_skeleton >= 1) return {n_skeleton, total - n_skeleton};
  }
}

int sample_doomed_offspring(const Decomposition& dec, const OffspringLaw& law, RngStream& rng) {
  if (dec.q <= 0.0) throw std::domain_error("sample_doomed_offspring: q = 0");
  for (;;) {
    const int total = sample_offspring(law, rng);
    if (rng.uniform() < std::pow(dec.q, total)) return total;
  }
}

OffspringLaw law_from_json_text(const std::string& text) {
  const auto doc = nlohmann::json::parse(text);
  if (!doc.contains("probs") || !doc["probs"].is_array())
    throw std::invalid_argument("law JSON must contain a \"probs\" array");
  const auto& arr = doc["probs"];
  Eigen::VectorXd probs(arr.size());
  for (std::size_t j = 0; j < arr.size(); ++j) probs[static_cast<Eigen::Index>(j)] = arr[j].get<double>();
  return OffspringLaw(std::move(probs));
}

OffspringLaw load_law(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open law file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return law_from_json_text(buf.str());
}

std::string pgf_report_json(const OffspringLaw& law, int mc_runs, std::uint64_t seed) {
  const Decomposition dec = decompose(law);
  nlohmann::json doc;
  doc["probs"] = std::vector<double>(law.probs().data(), law.probs().data() + law.probs().size());
  doc["q"] = dec.q;
  doc["mu"] = dec.mu;
  doc["m"] = dec.m;
  doc["kappa"] = dec.kappa;
  doc["alpha"] = dec.alpha;

  if (mc_runs > 0) {
    RngStream rng(seed);
    auto moment_block = [&](const char* name, double analytic_mean, auto&& draw) {
      double sum = 0.0, sumsq = 0.0;
      for (int i = 0; i < mc_runs; ++i) {
        const double x = draw();
        sum += x;
        sumsq += x * x;
      }
      const double n = static_cast<double>(mc_runs);
      const double emp_mean = sum / n;
      const double emp_var = std::max(sumsq / n - emp_mean * emp_mean, 0.0);
      const double se = std::sqrt(emp_var / n);
      nlohmann::json j;
      j["n"] = mc_runs;
      j["empirical_mean"] = emp_mean;
      j["analytic_mean"] = analytic_mean;
      j["z_score"] = se > 0 ? (emp_mean - analytic_mean) / se : 0.0;
      doc["moment_diagnostics"][name] = j;
    };
    moment_block("offspring", dec.mu,
                 [&] { return static_cast<double>(sample_offspring(law, rng)); });
    if (dec.q_bar > 0.0) {
      const double star_mean = dec.mu;  // (f*)'(1) = mu
      moment_block("skeleton_children", star_mean, [&] {
        return static_cast<double>(sample_skeleton_branch(dec, law, rng).n_skeleton);
      });
      if (dec.q > 0.0) {
        moment_block("doomed_per_skeleton_branch", expected_doomed_per_skeleton(dec, law), [&] {
          return static_cast<double>(sample_skeleton_branch(dec, law, rng).n_doomed);
        });
      }
    }
    if (dec.q > 0.0) {
      moment_block("doomed_offspring", dec.kappa,
                   [&] { return static_cast<double>(sample_doomed_offspring(dec, law, rng)); });
    }
  }
  return doc.dump(2);
}

}  // namespace bbmtraps
