#include "swapbound/subspace_models.hpp"

#include <string>

namespace swapbound {

void MeanModel::validate() const {
  if (thetas.empty()) throw ValidationError("mean model needs at least one source");
  if (p() > n()) throw ValidationError("mean model: more sources than elements");
  if (alpha.size() != p()) throw ValidationError("mean model: alpha length must equal number of sources");
  if (!(sigma2 > 0.0)) throw ValidationError("mean model: sigma2 must be > 0");
}

void CovarianceModel::validate() const {
  if (thetas.empty()) throw ValidationError("covariance model needs at least one source");
  if (p() > n()) throw ValidationError("covariance model: more sources than elements");
  if (r_alpha.rows() != p() || r_alpha.cols() != p())
    throw ValidationError("covariance model: R_alpha must be p x p");
  if ((r_alpha - r_alpha.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw ValidationError("covariance model: R_alpha must be Hermitian");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(r_alpha, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10)
    throw ValidationError("covariance model: R_alpha must be positive semidefinite");
  if (!(sigma2 > 0.0)) throw ValidationError("covariance model: sigma2 must be > 0");
}

namespace {

void require_columns(const CompressionOperator& psi, Index n) {
  if (psi.cols() != n)
    throw ValidationError("compressor has " + std::to_string(psi.cols()) + " columns, model has " +
                          std::to_string(n) + " elements");
}

void require_rank(const VectorXd& spectrum, Index p, const char* what) {
  if (spectrum.size() < p || !(spectrum(0) > 0.0) || !(spectrum(p - 1) > kRankTolerance * spectrum(0)))
    throw DegeneracyError(std::string(what) +
                          ": signal subspace is rank deficient (coincident sources or annihilated mode)");
}

MinimumMode pick_minimum(const CompressedModes& modes, const VectorXd& criterion) {
  const double smallest = criterion.minCoeff();
  const double cutoff = smallest * (1.0 + 1e-9) + 1e-300;
  MinimumMode out;
  int candidates = 0;
  for (Index i = criterion.size() - 1; i >= 0; --i) {
    if (criterion(i) <= cutoff) {
      out.index = i;
      ++candidates;
    }
  }
  out.tie = candidates > 1;
  out.rho = modes.h.col(out.index).normalized();
  return out;
}

}  // namespace

CompressedModes compressed_modes_mean(const MeanModel& model, const CompressionOperator& psi) {
  model.validate();
  require_columns(psi, model.n());
  CompressedModes out;
  out.h = psi.matrix * mode_matrix(model.positions, model.thetas);
  out.z = out.h * model.alpha;
  return out;
}

CompressedModes compressed_modes_cov(const CovarianceModel& model, const CompressionOperator& psi) {
  model.validate();
  require_columns(psi, model.n());
  CompressedModes out;
  out.h = psi.matrix * mode_matrix(model.positions, model.thetas);
  out.r_zz = out.h * model.r_alpha * out.h.adjoint();
  return out;
}

CompressedModes uncompressed_modes_mean(const MeanModel& model) {
  model.validate();
  CompressedModes out;
  out.h = mode_matrix(model.positions, model.thetas);
  out.z = out.h * model.alpha;
  return out;
}

CompressedModes uncompressed_modes_cov(const CovarianceModel& model) {
  model.validate();
  CompressedModes out;
  out.h = mode_matrix(model.positions, model.thetas);
  out.r_zz = out.h * model.r_alpha * out.h.adjoint();
  return out;
}

void normalize_column_phases(MatrixXcd& basis) {
  for (Index c = 0; c < basis.cols(); ++c) {
    auto col = basis.col(c);
    const double norm = col.norm();
    for (Index r = 0; r < col.size(); ++r) {
      if (std::abs(col(r)) > 1e-10 * norm) {
        col *= std::conj(col(r)) / std::abs(col(r));
        break;
      }
    }
  }
}

SubspaceSplit subspace_split_mean(const CompressedModes& modes) {
  const Index m = modes.m();
  const Index p = modes.p();
  Eigen::JacobiSVD<MatrixXcd> svd(modes.h, Eigen::ComputeFullU);
  SubspaceSplit out;
  out.spectrum = svd.singularValues();
  require_rank(out.spectrum, p, "subspace_split_mean");
  MatrixXcd u = svd.matrixU();
  normalize_column_phases(u);
  out.u_p = u.leftCols(p);
  out.u_0 = u.rightCols(m - p);
  return out;
}

SubspaceSplit subspace_split_cov(const CompressedModes& modes) {
  if (!modes.r_zz) throw ValidationError("subspace_split_cov requires R_zz");
  const Index m = modes.m();
  const Index p = modes.p();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(*modes.r_zz);
  if (eig.info() != Eigen::Success) throw DegeneracyError("eigendecomposition of R_zz failed");
  // Eigen sorts ascending.
  const VectorXd values = eig.eigenvalues().reverse();
  MatrixXcd u = eig.eigenvectors().rowwise().reverse();
  normalize_column_phases(u);
  SubspaceSplit out;
  out.spectrum = values.head(p);
  require_rank(values, p, "subspace_split_cov");
  out.u_p = u.leftCols(p);
  out.u_0 = u.rightCols(m - p);
  return out;
}

MinimumMode hmin_mean(const CompressedModes& modes) {
  if (!modes.z) throw ValidationError("hmin_mean requires z");
  const VectorXd criterion = (modes.h.adjoint() * *modes.z).cwiseAbs2();
  return pick_minimum(modes, criterion);
}

MinimumMode hmin_cov(const CompressedModes& modes) {
  if (!modes.r_zz) throw ValidationError("hmin_cov requires R_zz");
  VectorXd criterion(modes.p());
  for (Index i = 0; i < modes.p(); ++i) {
    const cd q = modes.h.col(i).dot(*modes.r_zz * modes.h.col(i));
    criterion(i) = std::norm(q);
  }
  return pick_minimum(modes, criterion);
}

// ---------------------------------------------------------------------------
// JSON

namespace {
nlohmann::json vector_to_json(const VectorXcd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back({v(i).real(), v(i).imag()});
  return out;
}
VectorXcd vector_from_json(const nlohmann::json& j) {
  VectorXcd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != 2) throw ValidationError("complex entries are [re, im]");
    v(static_cast<Index>(i)) = cd(j[i][0].get<double>(), j[i][1].get<double>());
  }
  return v;
}
}  // namespace

void to_json(nlohmann::json& j, const MeanModel& m) {
  j = {{"positions", m.positions}, {"thetas", m.thetas}, {"alpha", vector_to_json(m.alpha)}, {"sigma2", m.sigma2}};
}

void from_json(const nlohmann::json& j, MeanModel& m) {
  m.positions = j.at("positions").get<ElementPositions>();
  m.thetas = j.at("thetas").get<std::vector<double>>();
  m.alpha = vector_from_json(j.at("alpha"));
  m.sigma2 = j.at("sigma2").get<double>();
  m.validate();
}

void to_json(nlohmann::json& j, const CovarianceModel& m) {
  j = {{"positions", m.positions}, {"thetas", m.thetas}, {"r_alpha", matrix_to_json(m.r_alpha)}, {"sigma2", m.sigma2}};
}

void from_json(const nlohmann::json& j, CovarianceModel& m) {
  m.positions = j.at("positions").get<ElementPositions>();
  m.thetas = j.at("thetas").get<std::vector<double>>();
  m.r_alpha = matrix_from_json(j.at("r_alpha"));
  m.sigma2 = j.at("sigma2").get<double>();
  m.validate();
}

}  // namespace swapbound
