// CDFs of chi-square, F, their noncentral forms, and signed chi-square mixtures.
//
// Noncentral laws are evaluated as Poisson mixtures of central CDFs, summed
// outward from the dominant term in log space. Both tails of the mixture are
// truncated only once a rigorous bound on the neglected mass is below
// min(1e-12, 1e-14 * sum); more than kMaxSeriesTerms terms raises AccuracyError.
//
// Signed mixtures (generalized F) use Imhof's inversion of the characteristic
// function with adaptive Gauss-Kronrod quadrature. The achieved error is
// returned with the value.
#pragma once

#include "swapbound/core.hpp"

#include <span>
#include <vector>

namespace swapbound {

/// Degrees of freedom of a real chi-square; always >= 1.
class Dof {
 public:
  explicit Dof(int value);
  int value() const noexcept { return value_; }
  double half() const noexcept { return 0.5 * value_; }
  friend bool operator==(Dof, Dof) = default;

 private:
  int value_;
};

/// Noncentrality parameter (real convention: sum of squared standardized means).
class Noncentrality {
 public:
  explicit Noncentrality(double delta);
  double value() const noexcept { return delta_; }

 private:
  double delta_;
};

/// Positively weighted sum of independent chi-squares, sum_i weights[i] * chi2(dofs[i]).
struct WeightedChiSquareMix {
  std::vector<double> weights;
  std::vector<Dof> dofs;

  WeightedChiSquareMix() = default;
  WeightedChiSquareMix(std::vector<double> w, std::vector<Dof> d);
  std::size_t size() const noexcept { return weights.size(); }
};

inline constexpr int kMaxSeriesTerms = 100000;
inline constexpr double kQuadformTolerance = 1e-6;

double chi2_cdf(double x, Dof d);
double log_chi2_cdf(double x, Dof d);

double noncentral_chi2_cdf(double x, Dof d, Noncentrality nc);
/// log P(chi2_d(delta) <= x), accurate far below the smallest double.
double log_noncentral_chi2_cdf(double x, Dof d, Noncentrality nc);

double f_cdf(double x, Dof d1, Dof d2);
double log_f_cdf(double x, Dof d1, Dof d2);

double noncentral_f_cdf(double x, Dof d1, Dof d2, Noncentrality nc);
double log_noncentral_f_cdf(double x, Dof d1, Dof d2, Noncentrality nc);

struct QuadformResult {
  double probability = 0.0;
  double error_estimate = 0.0;  // absolute; quadrature + truncation
};

/// P( sum a_i chi2(f_i) - sum b_j chi2(g_j) < 0 ).
QuadformResult quadform_below_zero(const WeightedChiSquareMix& mix_pos,
                                   const WeightedChiSquareMix& mix_neg);

/// P( (sum_i w_i xi_i / (p * f)) / (nu / g) < 1 ) with xi_i ~ chi2(f), nu ~ chi2(g),
/// p = weights.size().
QuadformResult generalized_f_below_one(std::span<const double> weights, Dof num_dof_each,
                                       Dof den_dof);

}  // namespace swapbound
