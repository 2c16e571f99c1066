#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "bbmtraps/rng.hpp"

namespace bbmtraps {

/**
 * Finite-support offspring distribution on {0, 1, ..., J}.
 *
 * Probabilities are stored as a dense vector indexed by offspring count, so
 * the generating function and all of its derivatives are exact polynomials.
 * Instances are immutable after construction; the cumulative table is kept
 * for inverse-CDF sampling.
 */
class OffspringLaw {
 public:
  explicit OffspringLaw(Eigen::VectorXd probs);

  const Eigen::VectorXd& probs() const { return probs_; }
  int max_children() const { return static_cast<int>(probs_.size()) - 1; }
  double prob(int j) const { return j >= 0 && j < probs_.size() ? probs_[j] : 0.0; }

  double mean() const;                // mu = f'(1)
  double mean_minus_one() const { return mean() - 1.0; }  // m

  /// True when no mass sits on a single child (lambda(1) = 0).
  bool is_canonical() const { return probs_.size() < 2 || probs_[1] == 0.0; }

  const Eigen::VectorXd& cumulative() const { return cumulative_; }

 private:
  Eigen::VectorXd probs_;
  Eigen::VectorXd cumulative_;
};

/// Derived constants of the skeleton/doomed decomposition.
struct Decomposition {
  double q;      // extinction probability
  double q_bar;  // 1 - q
  double mu;     // offspring mean
  double m;      // mu - 1
  double kappa;  // f'(q)
  double k;      // kappa - 1
  double alpha;  // 1 - f'(q)
};

/// Evaluates D^order f at s for s in [0, 1] (order 0 is f itself).
double eval_pgf(const OffspringLaw& law, double s, int order = 0);

/// Smallest fixed point of f on [0, 1].
double extinction_prob(const OffspringLaw& law);

Decomposition decompose(const OffspringLaw& law);

/// Doomed-subtree p.g.f. f~(s) = f(q s)/q. Requires q > 0.
double doomed_pgf(const Decomposition& dec, const OffspringLaw& law, double s);

/// Skeleton p.g.f. f*(s) = [f(q + q_bar s) - q]/q_bar. Requires q < 1.
double skeleton_pgf(const Decomposition& dec, const OffspringLaw& law, double s);

/// Coefficient vector of f* as a concrete law (mass on 1 allowed).
OffspringLaw skeleton_law(const Decomposition& dec, const OffspringLaw& law);

struct RateScaledLaw {
  double rate_multiplier;
  OffspringLaw law;
};

/**
 * The equivalent no-mass-on-one description of the skeleton process:
 * rate multiplier alpha together with the law whose p.g.f. is
 * fbar(s) = [f*(s) - f'(q) s] / (1 - f'(q)).
 */
RateScaledLaw canonical_skeleton(const Decomposition& dec, const OffspringLaw& law);

/// Moves any mass on 1 into the branching rate: returns (1 - lambda(1), lawbar).
RateScaledLaw canonicalize(const OffspringLaw& law);

/// Total-offspring p.g.f. of a skeleton particle, (f(s) - f(q s))/q_bar.
double skeleton_total_offspring_pgf(const Decomposition& dec, const OffspringLaw& law, double s);

/// Expected doomed children per skeleton branching, (mu - kappa) q / q_bar.
double expected_doomed_per_skeleton(const Decomposition& dec, const OffspringLaw& law);

/// Two-type mean matrix A(t); entry (i, j) is E[type-j count | one type-i ancestor].
Eigen::Matrix2d mean_matrix(const Decomposition& dec, double beta, double t);

/// Mean matrix of the dominating process whose doomed particles breed like skeletons.
Eigen::Matrix2d modified_mean_matrix(const Decomposition& dec, double beta, double t);

int sample_offspring(const OffspringLaw& law, RngStream& rng);

struct SkeletonBranch {
  int n_skeleton;  // >= 1
  int n_doomed;
};

/// One skeleton branching event: children split by an independent q_bar coin,
/// rejecting draws with no skeleton child.
SkeletonBranch sample_skeleton_branch(const Decomposition& dec, const OffspringLaw& law,
                                      RngStream& rng);

/// One doomed branching event; accepts a draw of L children with probability q^L.
int sample_doomed_offspring(const Decomposition& dec, const OffspringLaw& law, RngStream& rng);

/// Reads {"probs": [p0, p1, ...]} from a JSON file.
OffspringLaw load_law(const std::string& path);
OffspringLaw law_from_json_text(const std::string& text);

/// JSON report with q, mu, m, kappa, alpha and sampled-moment diagnostics.
std::string pgf_report_json(const OffspringLaw& law, int mc_runs, std::uint64_t seed);

}  // namespace bbmtraps
