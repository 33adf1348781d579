#include "swapbound/distributions.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace swapbound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTinyDirect = 1e-280;
constexpr double kAbsTailTol = 1e-12;
constexpr double kRelTailTol = 1e-14;

void require_cdf_argument(double x) {
  if (std::isnan(x) || x < 0.0) throw DomainError("CDF argument must be >= 0, got " + std::to_string(x));
}

// log P(a, y), regularized lower incomplete gamma. Falls back to the power
// series when the direct value underflows.
double log_gamma_p(double a, double y) {
  if (y <= 0.0) return -kInf;
  if (std::isinf(y)) return 0.0;
  const double direct = boost::math::gamma_p(a, y);
  if (direct > kTinyDirect) return std::log(direct);
  const double lead = a * std::log(y) - y - std::lgamma(a + 1.0);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 1000000; ++k) {
    term *= y / (a + k);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return lead + std::log(sum);
}

// log I_u(a, b), regularized incomplete beta, with the same underflow fallback.
double log_ibeta(double a, double b, double u) {
  if (u <= 0.0) return -kInf;
  if (u >= 1.0) return 0.0;
  const double direct = boost::math::ibeta(a, b, u);
  if (direct > kTinyDirect) return std::log(direct);
  const double lead = a * std::log(u) + b * std::log1p(-u) + std::lgamma(a + b) -
                      std::lgamma(a + 1.0) - std::lgamma(b);
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 1000000; ++k) {
    term *= (a + b + k - 1.0) / (a + k) * u;
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return lead + std::log(sum);
}

double log_poisson(long j, double lambda) {
  return -lambda + static_cast<double>(j) * std::log(lambda) - std::lgamma(static_cast<double>(j) + 1.0);
}

// Sum over j >= 0 of Poisson(j; lambda) * c_j where c_j is nonincreasing in j
// and bounded by 1. Terms:
//   log_c(j)       log c_j
//   ratio_down(j)  upper bound on t_{i-1}/t_i for every i <= j (inf if unknown)
//   ratio_up(j)    upper bound on t_{i+1}/t_i for every i >= j (inf if unknown)
template <class LogC, class Down, class Up>
double log_poisson_mixture(double lambda, LogC&& log_c, Down&& ratio_down, Up&& ratio_up) {
  auto log_term = [&](long j) { return log_poisson(j, lambda) + log_c(j); };

  // c_j is nonincreasing, so the dominant term lies at or below the Poisson mode.
  long lo_search = 0;
  long hi_search = static_cast<long>(std::floor(lambda));
  while (hi_search - lo_search > 2) {
    const long m1 = lo_search + (hi_search - lo_search) / 3;
    const long m2 = hi_search - (hi_search - lo_search) / 3;
    if (log_term(m1) < log_term(m2))
      lo_search = m1 + 1;
    else
      hi_search = m2;
  }
  long peak = lo_search;
  double log_peak = log_term(peak);
  for (long j = lo_search + 1; j <= hi_search; ++j) {
    const double lt = log_term(j);
    if (lt > log_peak) {
      log_peak = lt;
      peak = j;
    }
  }
  if (log_peak == -kInf) return -kInf;

  double scaled_sum = 1.0;  // sum of t_j / t_peak
  long terms = 1;
  auto log_total = [&] { return log_peak + std::log(scaled_sum); };
  auto log_tolerance = [&] {
    return std::min(std::log(kAbsTailTol), log_total() + std::log(kRelTailTol));
  };
  auto count_term = [&] {
    if (++terms > kMaxSeriesTerms)
      throw AccuracyError("Poisson mixture series exceeded " + std::to_string(kMaxSeriesTerms) +
                              " terms (noncentrality too large)",
                          std::exp(log_total()));
  };

  // Downward from the peak.
  long lo = peak;
  double log_t_lo = log_peak;
  while (lo > 0) {
    double log_bound = std::log(boost::math::gamma_q(static_cast<double>(lo), lambda));
    const double r = ratio_down(lo);
    if (r < 1.0) log_bound = std::min(log_bound, log_t_lo + std::log(r / (1.0 - r)));
    if (log_bound <= log_tolerance()) break;
    --lo;
    log_t_lo = log_term(lo);
    scaled_sum += std::exp(log_t_lo - log_peak);
    count_term();
  }

  // Upward from the peak.
  long hi = peak;
  double log_t_hi = log_peak;
  for (;;) {
    double log_bound = log_c(hi) + std::log(boost::math::gamma_p(static_cast<double>(hi + 1), lambda));
    const double r = ratio_up(hi);
    if (r < 1.0) log_bound = std::min(log_bound, log_t_hi + std::log(r / (1.0 - r)));
    if (log_bound <= log_tolerance()) break;
    ++hi;
    log_t_hi = log_term(hi);
    scaled_sum += std::exp(log_t_hi - log_peak);
    count_term();
  }
  return std::min(0.0, log_total());
}

}  // namespace

Dof::Dof(int value) : value_(value) {
  if (value < 1) throw ValidationError("degrees of freedom must be >= 1, got " + std::to_string(value));
}

Noncentrality::Noncentrality(double delta) : delta_(delta) {
  if (!(delta >= 0.0) || std::isinf(delta))
    throw ValidationError("noncentrality must be finite and >= 0, got " + std::to_string(delta));
}

WeightedChiSquareMix::WeightedChiSquareMix(std::vector<double> w, std::vector<Dof> d)
    : weights(std::move(w)), dofs(std::move(d)) {
  if (weights.size() != dofs.size()) throw ValidationError("weights and dofs must pair up");
  for (double a : weights)
    if (!(a > 0.0) || std::isinf(a)) throw ValidationError("mixture weights must be finite and > 0");
}

// ---------------------------------------------------------------------------
// Central laws

double chi2_cdf(double x, Dof d) {
  require_cdf_argument(x);
  if (std::isinf(x)) return 1.0;
  return boost::math::gamma_p(d.half(), 0.5 * x);
}

double log_chi2_cdf(double x, Dof d) {
  require_cdf_argument(x);
  return log_gamma_p(d.half(), 0.5 * x);
}

double f_cdf(double x, Dof d1, Dof d2) {
  require_cdf_argument(x);
  if (std::isinf(x)) return 1.0;
  const double num = d1.value() * x;
  return boost::math::ibeta(d1.half(), d2.half(), num / (num + d2.value()));
}

double log_f_cdf(double x, Dof d1, Dof d2) {
  require_cdf_argument(x);
  if (std::isinf(x)) return 0.0;
  const double num = d1.value() * x;
  return log_ibeta(d1.half(), d2.half(), num / (num + d2.value()));
}

// ---------------------------------------------------------------------------
// Noncentral laws

double log_noncentral_chi2_cdf(double x, Dof d, Noncentrality nc) {
  require_cdf_argument(x);
  if (nc.value() == 0.0) return log_chi2_cdf(x, d);
  if (x == 0.0) return -kInf;
  if (std::isinf(x)) return 0.0;
  const double lambda = 0.5 * nc.value();
  const double y = 0.5 * x;
  const double a0 = d.half();
  return log_poisson_mixture(
      lambda, [&](long j) { return log_gamma_p(a0 + j, y); },
      [&](long j) { return (j / lambda) * (1.0 + (a0 + j) / y); },
      [&](long j) { return lambda / (j + 1.0) * y / (a0 + j + 1.0); });
}

double noncentral_chi2_cdf(double x, Dof d, Noncentrality nc) {
  if (nc.value() == 0.0) return chi2_cdf(x, d);
  return std::exp(log_noncentral_chi2_cdf(x, d, nc));
}

double log_noncentral_f_cdf(double x, Dof d1, Dof d2, Noncentrality nc) {
  require_cdf_argument(x);
  if (nc.value() == 0.0) return log_f_cdf(x, d1, d2);
  if (x == 0.0) return -kInf;
  if (std::isinf(x)) return 0.0;
  const double lambda = 0.5 * nc.value();
  const double num = d1.value() * x;
  const double u = num / (num + d2.value());
  const double a0 = d1.half();
  const double b = d2.half();
  return log_poisson_mixture(
      lambda, [&](long j) { return log_ibeta(a0 + j, b, u); },
      [&](long j) {
        if (b < 1.0) return kInf;
        const double a = a0 + j;
        return (j / lambda) * (1.0 + a / ((a + b - 1.0) * u));
      },
      [&](long j) {
        if (b < 1.0) return kInf;
        const double a = a0 + j;
        return lambda / (j + 1.0) * u * (a + b) / (a + 1.0);
      });
}

double noncentral_f_cdf(double x, Dof d1, Dof d2, Noncentrality nc) {
  if (nc.value() == 0.0) return f_cdf(x, d1, d2);
  return std::exp(log_noncentral_f_cdf(x, d1, d2, nc));
}

// ---------------------------------------------------------------------------
// Signed chi-square mixtures

namespace {

// P(sum_r lam_r chi2(h_r) < 0) by Imhof's formula
//   P(Q > 0) = 1/2 + (1/pi) int_0^inf sin(theta(u)) / (u rho(u)) du.
QuadformResult imhof_below_zero(std::vector<double> lam, const std::vector<double>& h) {
  double scale = 0.0;
  for (double l : lam) scale = std::max(scale, std::abs(l));
  for (double& l : lam) l /= scale;

  double slope0 = 0.0;  // theta'(0)
  double slope_max = 0.0;
  for (std::size_t r = 0; r < lam.size(); ++r) {
    slope0 += 0.5 * h[r] * lam[r];
    slope_max += 0.5 * h[r] * std::abs(lam[r]);
  }

  auto log_rho = [&](double u) {
    double s = 0.0;
    for (std::size_t r = 0; r < lam.size(); ++r) s += 0.25 * h[r] * std::log1p(lam[r] * lam[r] * u * u);
    return s;
  };
  auto integrand = [&](double u) {
    if (u < 1e-300) return slope0;
    double theta = 0.0;
    for (std::size_t r = 0; r < lam.size(); ++r) theta += 0.5 * h[r] * std::atan(lam[r] * u);
    return std::sin(theta) * std::exp(-log_rho(u)) / u;
  };

  // For u >= U, rho(u) >= rho(U) (u/U)^kappa(U), so the neglected tail of the
  // integral is at most 1 / (rho(U) kappa(U)).
  auto tail_bound = [&](double upper) {
    double kappa = 0.0;
    for (std::size_t r = 0; r < lam.size(); ++r) {
      const double q = lam[r] * lam[r] * upper * upper;
      kappa += 0.5 * h[r] * q / (1.0 + q);
    }
    return std::exp(-log_rho(upper)) / kappa;
  };
  double upper = 1.0;
  while (tail_bound(upper) > 1e-14 && upper < 1e15) upper *= 1.5;
  const double truncation = tail_bound(upper);

  const double pieces_wanted = std::ceil(upper * slope_max / kPi);
  const int pieces = static_cast<int>(std::clamp(pieces_wanted, 16.0, 4000.0));
  double integral = 0.0;
  double quad_error = 0.0;
  const double width = upper / pieces;
  for (int k = 0; k < pieces; ++k) {
    double err = 0.0;
    integral += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, k * width, (k + 1) * width, 3, 1e-10, &err);
    quad_error += err;
  }

  QuadformResult out;
  out.probability = std::clamp(0.5 - integral / kPi, 0.0, 1.0);
  out.error_estimate = (quad_error + truncation) / kPi + 4.0 * std::numeric_limits<double>::epsilon();
  if (!(out.error_estimate <= kQuadformTolerance))
    throw AccuracyError("characteristic-function inversion missed its accuracy target",
                        out.error_estimate);
  return out;
}

}  // namespace

QuadformResult quadform_below_zero(const WeightedChiSquareMix& mix_pos,
                                   const WeightedChiSquareMix& mix_neg) {
  if (mix_pos.size() == 0 || mix_neg.size() == 0)
    throw ValidationError("both chi-square mixtures must be nonempty");
  std::vector<double> lam;
  std::vector<double> h;
  for (std::size_t i = 0; i < mix_pos.size(); ++i) {
    lam.push_back(mix_pos.weights[i]);
    h.push_back(mix_pos.dofs[i].value());
  }
  for (std::size_t j = 0; j < mix_neg.size(); ++j) {
    lam.push_back(-mix_neg.weights[j]);
    h.push_back(mix_neg.dofs[j].value());
  }
  return imhof_below_zero(std::move(lam), h);
}

QuadformResult generalized_f_below_one(std::span<const double> weights, Dof num_dof_each, Dof den_dof) {
  if (weights.empty()) throw ValidationError("generalized F needs at least one weight");
  const double p = static_cast<double>(weights.size());
  std::vector<double> pos;
  for (double w : weights) pos.push_back(w / (p * num_dof_each.value()));
  WeightedChiSquareMix numerator(std::move(pos), std::vector<Dof>(weights.size(), num_dof_each));
  WeightedChiSquareMix denominator({1.0 / den_dof.value()}, {den_dof});
  return quadform_below_zero(numerator, denominator);
}

}  // namespace swapbound
