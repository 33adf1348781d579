// Lower bounds on the probability of a subspace swap.
//
// Two subevents of the swap event are bounded analytically:
//   F: mean energy in <U_0> exceeds mean energy in <U_p>,   T_F = P_{U_0}/(m-p) - P_{U_p}/p
//   G: mean energy in <U_0> exceeds energy in the a-priori minimum mode rho_min,
//                                                            T_G = P_{U_0}/(m-p) - rho rho^H
// Each subevent is {tr(W^H T W) > 0} for the m x M snapshot matrix W.
//
//   mean model,  F:  noncentral F(2pM, 2(m-p)M, c M |z|^2 / sigma2)          <= 1
//   mean model,  G:  noncentral F(2M,  2(m-p)M, c M |rho^H z|^2 / sigma2)    <= 1
//   cov model,   F:  generalized F[(1 + lambda_i / sigma2); 2Mp; 2M(m-p)]     <  1
//   cov model,   G:  central F(2M, 2M(m-p))  <  sigma2 / (rho^H R_ww rho)
//
// c = kNoncentralityScale maps the complex-normal noncentrality |mu|^2/sigma2
// onto the real chi-square convention, and M counts the snapshots that share
// the mean.
#pragma once

#include "swapbound/subspace_models.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace swapbound {

enum class SwapEvent { F, G };
enum class ModelKind { mean, covariance };

std::string to_string(SwapEvent e);
std::string to_string(ModelKind k);
SwapEvent parse_event(const std::string& s);

/// Fixed by the Monte-Carlo calibration in the acceptance suite.
inline constexpr double kNoncentralityScale = 2.0;

struct DistParams {
  int num_dof = 0;
  int den_dof = 0;
  double noncentrality = 0.0;   // mean model
  std::vector<double> weights;  // covariance F: 1 + lambda_i / sigma2
  double threshold = 1.0;       // CDF argument
  double accuracy = 0.0;        // absolute error estimate of the probability
};

struct SwapBound {
  SwapEvent event = SwapEvent::F;
  ModelKind model = ModelKind::mean;
  double snr_db = 0.0;
  double probability = 0.0;
  double log_probability = 0.0;
  DistParams dist;
  bool compressed = true;
};

SwapBound bound_F_mean(const MeanModel& model, const CompressionOperator& psi, int snapshots);
SwapBound bound_G_mean(const MeanModel& model, const CompressionOperator& psi, int snapshots);
SwapBound bound_F_cov(const CovarianceModel& model, const CompressionOperator& psi, int snapshots);
SwapBound bound_G_cov(const CovarianceModel& model, const CompressionOperator& psi, int snapshots);

SwapBound swap_bound(const MeanModel& model, const CompressionOperator& psi, SwapEvent event, int snapshots);
SwapBound swap_bound(const CovarianceModel& model, const CompressionOperator& psi, SwapEvent event,
                     int snapshots);
/// Bounds for the dense array itself (m = n, modes taken from K directly).
SwapBound swap_bound_uncompressed(const MeanModel& model, SwapEvent event, int snapshots);
SwapBound swap_bound_uncompressed(const CovarianceModel& model, SwapEvent event, int snapshots);

/// Per-element SNR of the first source: |alpha_1|^2 / sigma2 or [R_alpha]_11 / sigma2, in dB.
double model_snr_db(const MeanModel& model);
double model_snr_db(const CovarianceModel& model);

// ---------------------------------------------------------------------------
// Monte-Carlo event checks

struct EventStatistic {
  SwapEvent t_matrix_kind = SwapEvent::F;
  double value = 0.0;  // tr(W^H T W)
};

EventStatistic event_statistic(const MatrixXcd& w, const SubspaceSplit& split, const VectorXcd& rho_min,
                               SwapEvent event);

/// Event E(1): some mode h_i resolves less energy than the best single direction in <U_0>.
bool swap_event_e1(const MatrixXcd& w, const CompressedModes& modes, const SubspaceSplit& split);

struct McEstimate {
  double probability = 0.0;
  double std_error = 0.0;  // binomial
  long trials = 0;
  long hits = 0;
};

/// Fraction of trials with tr(W^H T W) > 0. Trial t draws from stream (seed, t).
McEstimate mc_event_probability(const MeanModel& model, const CompressionOperator& psi, int snapshots,
                                SwapEvent event, long trials, std::uint64_t seed);
McEstimate mc_event_probability(const CovarianceModel& model, const CompressionOperator& psi, int snapshots,
                                SwapEvent event, long trials, std::uint64_t seed);

/// Frequencies of F, G and E(1) on shared draws; used to check F, G subset of E(1).
struct McEventFrequencies {
  McEstimate f;
  McEstimate g;
  McEstimate e1;
  long f_without_e1 = 0;
  long g_without_e1 = 0;
};
McEventFrequencies mc_event_frequencies(const MeanModel& model, const CompressionOperator& psi, int snapshots,
                                        long trials, std::uint64_t seed);
McEventFrequencies mc_event_frequencies(const CovarianceModel& model, const CompressionOperator& psi,
                                        int snapshots, long trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Random compressors

struct MarginalBound {
  double mean = 0.0;
  double std_dev = 0.0;  // sample std across draws
  std::vector<double> values;
};

/// Average of the conditional bound over `draws` Stiefel-uniform m x n compressors.
MarginalBound marginal_bound_random_psi(const MeanModel& model, Index m, SwapEvent event, int snapshots,
                                        int draws, std::uint64_t seed);
MarginalBound marginal_bound_random_psi(const CovarianceModel& model, Index m, SwapEvent event, int snapshots,
                                        int draws, std::uint64_t seed);

namespace detail {
/// Mean-model bound with an explicit noncentrality scale; calibration hook.
SwapBound mean_bound_with_scale(const MeanModel& model, const CompressionOperator& psi, SwapEvent event,
                                int snapshots, double scale);
}  // namespace detail

}  // namespace swapbound
