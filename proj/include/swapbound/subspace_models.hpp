// Parameterized-mean and parameterized-covariance measurement models, the
// compressed mode matrix H = Psi K, and the signal/orthogonal subspace split.
#pragma once

#include "swapbound/array_geometry.hpp"

#include <json.hpp>

#include <optional>
#include <vector>

namespace swapbound {

/// Relative tolerance that decides whether H (or R_zz) has rank p.
inline constexpr double kRankTolerance = 1e-8;

/// y ~ CN(K(theta) alpha, sigma2 I).
struct MeanModel {
  ElementPositions positions;
  std::vector<double> thetas;
  VectorXcd alpha;
  double sigma2 = 1.0;

  Index n() const noexcept { return positions.size(); }
  Index p() const noexcept { return static_cast<Index>(thetas.size()); }
  void validate() const;
};

/// y ~ CN(0, K R_alpha K^H + sigma2 I).
struct CovarianceModel {
  ElementPositions positions;
  std::vector<double> thetas;
  MatrixXcd r_alpha;
  double sigma2 = 1.0;

  Index n() const noexcept { return positions.size(); }
  Index p() const noexcept { return static_cast<Index>(thetas.size()); }
  void validate() const;
};

struct CompressedModes {
  MatrixXcd h;                     // m x p, H = Psi K
  std::optional<VectorXcd> z;      // H alpha (mean model)
  std::optional<MatrixXcd> r_zz;   // H R_alpha H^H (covariance model)

  Index m() const noexcept { return h.rows(); }
  Index p() const noexcept { return h.cols(); }
};

struct SubspaceSplit {
  MatrixXcd u_p;      // m x p
  MatrixXcd u_0;      // m x (m - p)
  VectorXd spectrum;  // singular values of H, or top-p eigenvalues of R_zz; nonincreasing

  MatrixXcd projector_signal() const { return u_p * u_p.adjoint(); }
  MatrixXcd projector_orthogonal() const { return u_0 * u_0.adjoint(); }
};

/// Column of H selected as the a-priori minimum mode, with rho = h / |h|.
struct MinimumMode {
  Index index = 0;
  VectorXcd rho;
  bool tie = false;
};

CompressedModes compressed_modes_mean(const MeanModel& model, const CompressionOperator& psi);
CompressedModes compressed_modes_cov(const CovarianceModel& model, const CompressionOperator& psi);
/// H = K directly, without multiplying by an identity operator.
CompressedModes uncompressed_modes_mean(const MeanModel& model);
CompressedModes uncompressed_modes_cov(const CovarianceModel& model);

SubspaceSplit subspace_split_mean(const CompressedModes& modes);
SubspaceSplit subspace_split_cov(const CompressedModes& modes);

MinimumMode hmin_mean(const CompressedModes& modes);
MinimumMode hmin_cov(const CompressedModes& modes);

/// Scales every column so its first component above 1e-10 of the column norm is real positive.
void normalize_column_phases(MatrixXcd& basis);

void to_json(nlohmann::json& j, const MeanModel& m);
void from_json(const nlohmann::json& j, MeanModel& m);
void to_json(nlohmann::json& j, const CovarianceModel& m);
void from_json(const nlohmann::json& j, CovarianceModel& m);

}  // namespace swapbound
