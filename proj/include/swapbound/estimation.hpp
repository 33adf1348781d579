// Monte-Carlo ML direction-of-arrival estimation on dense and compressed line
// arrays, Cramer-Rao bounds, and threshold-SNR extraction.
#pragma once

#include "swapbound/swap_bounds.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace swapbound {

/// Error variance of an angle uniform on (-pi/2, pi/2): pi^2 / 12.
inline constexpr double kSwapErrorVariance = kPi * kPi / 12.0;

enum class CovCriterion { stochastic, deterministic };

/// Which sub-array of the dense array is observed.
struct ArraySpec {
  enum class Kind { dense, coprime, random };
  std::string label = "dense";
  Kind kind = Kind::dense;
  int m1 = 0;  // coprime
  int m2 = 0;
  Index m = 0;             // random
  std::uint64_t seed = 0;  // random
};

CompressionOperator make_compressor(const ArraySpec& spec, Index n);

struct EstimatorOptions {
  double points_per_rayleigh = 8.0;
  double refine_step = 1e-4;
  CovCriterion cov_criterion = CovCriterion::stochastic;
};

struct Scenario {
  ModelKind kind = ModelKind::mean;
  int n = 16;  // dense elements at half-wavelength spacing
  ArraySpec array;
  std::vector<double> thetas;
  VectorXcd alpha;    // mean model amplitudes
  MatrixXcd r_alpha;  // covariance model source covariance
  int snapshots = 1;
  std::vector<double> snr_grid_db;
  long trials = 1;
  std::uint64_t master_seed = 1;
  EstimatorOptions estimator;

  void validate() const;
  ElementPositions dense_positions() const { return ElementPositions::dense(n); }
  /// Per-element SNR of source 1 sets sigma2 = |alpha_1|^2 / 10^(snr/10) (or [R_alpha]_11).
  double sigma2_at(double snr_db) const;
  MeanModel mean_model(double snr_db) const;
  CovarianceModel cov_model(double snr_db) const;
  /// Event used for swap flags and the method of intervals: F for mean, G for covariance.
  SwapEvent default_event() const { return kind == ModelKind::mean ? SwapEvent::F : SwapEvent::G; }
};

/// Snapshot matrix W = Psi Y (m x M) for grid point `snr_index` and trial `trial_index`.
/// The dense draw Y depends only on (master_seed, snr_index, trial_index), so every
/// array in an experiment observes the same realization.
MatrixXcd simulate_snapshots(const Scenario& scenario, const CompressionOperator& psi, std::size_t snr_index,
                             std::size_t trial_index);

/// Two-source ML estimator: coarse search over ordered grid pairs, then pattern-search refinement.
class MlEstimator {
 public:
  MlEstimator(ElementPositions dense, CompressionOperator psi, ModelKind kind, EstimatorOptions options);

  /// Ordered estimates theta_a < theta_b in (-pi/2, pi/2).
  std::array<double, 2> estimate(const MatrixXcd& w) const;
  /// Concentrated log-likelihood (up to constants) at the pair (a, b).
  double criterion(const MatrixXcd& w, double a, double b) const;

  const std::vector<double>& grid() const noexcept { return grid_; }
  double grid_step() const noexcept { return grid_step_; }

 private:
  struct DataStats;
  DataStats stats(const MatrixXcd& w) const;
  double evaluate(const Eigen::Matrix2cd& gram, const Eigen::Matrix2cd& b, const DataStats& s) const;
  double criterion(const DataStats& s, double a, double b) const;
  VectorXcd mode(double theta) const;

  ElementPositions dense_;
  CompressionOperator psi_;
  ModelKind kind_;
  EstimatorOptions options_;
  std::vector<double> grid_;
  double grid_step_ = 0.0;
  MatrixXcd grid_modes_;  // m x G
  MatrixXcd grid_gram_;   // G x G
};

std::array<double, 2> ml_estimate(const MatrixXcd& w, const Scenario& scenario, const CompressionOperator& psi);

/// Assignment of estimates to true angles minimizing the total squared error;
/// returns the estimate assigned to truth[0].
double associate_theta1(const std::array<double, 2>& estimates, const std::vector<double>& truth);

/// (1,1) entry of the inverse Fisher information for theta_1.
/// Mean model: deterministic CRB, unknown complex amplitudes.
/// Covariance model: Slepian-Bangs with R_alpha entries and sigma2 as nuisance parameters.
double crb_theta1(const Scenario& scenario, const CompressionOperator& psi, double snr_db);
/// Same bound for the dense array, with K used directly.
double crb_theta1_uncompressed(const Scenario& scenario, double snr_db);

struct MsePoint {
  double snr_db = 0.0;
  double mse = 0.0;
  long trials = 0;
  double swap_frequency = 0.0;  // fraction of trials where the default event occurred
};

struct MseCurve {
  std::string label;
  std::vector<MsePoint> points;
  std::vector<std::vector<std::array<double, 2>>> estimates;  // [snr][trial], ordered pairs
};

MseCurve mse_sweep(const Scenario& scenario);
std::vector<double> crb_curve(const Scenario& scenario, const CompressionOperator& psi);
/// Default-event bound on each grid SNR for the scenario's array.
std::vector<double> pss_bound_curve(const Scenario& scenario, const CompressionOperator& psi,
                                    std::optional<SwapEvent> event = std::nullopt);

/// sigma_T^2 = P_ss pi^2/12 + (1 - P_ss) sigma_CR^2, pointwise.
std::vector<double> method_of_intervals(const std::vector<double>& pss, const std::vector<double>& crb);

class NoThresholdError : public std::runtime_error {
 public:
  NoThresholdError() : std::runtime_error("no threshold in range") {}
};

/// Smallest SNR from which curve <= multiplier * crb holds for every higher grid
/// point, linearly interpolated in dB between the straddling grid points.
double threshold_snr(const std::vector<double>& snr_grid_db, const std::vector<double>& curve,
                     const std::vector<double>& crb, double multiplier = 2.0);

struct ArrayThreshold {
  std::string label;
  Index elements = 0;
  std::optional<double> threshold_snr_db;  // empty: no threshold in range
};

struct ThresholdReport {
  std::vector<ArrayThreshold> arrays;
  std::optional<double> delta_db;  // arrays[1] - arrays[0]
  double predicted_delta_db = 0.0; // 10 log10(n / m)
};

ThresholdReport make_threshold_report(std::vector<ArrayThreshold> arrays, Index dense_elements,
                                      Index compressed_elements);

}  // namespace swapbound
