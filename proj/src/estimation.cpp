#include "swapbound/estimation.hpp"

#include <cmath>
#include <limits>

namespace swapbound {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

CompressionOperator make_compressor(const ArraySpec& spec, Index n) {
  switch (spec.kind) {
    case ArraySpec::Kind::dense: return identity_compressor(n);
    case ArraySpec::Kind::coprime: return selection_compressor(coprime_positions(spec.m1, spec.m2), n);
    case ArraySpec::Kind::random: return random_whitened_compressor(spec.m, n, spec.seed);
  }
  throw ValidationError("unknown array kind");
}

// ---------------------------------------------------------------------------
// Scenario

void Scenario::validate() const {
  if (n < 3) throw ValidationError("scenario: dense array needs at least 3 elements");
  if (thetas.size() != 2) throw ValidationError("scenario: experiments use exactly two sources");
  for (double t : thetas)
    if (!(t > -kPi / 2 && t < kPi / 2)) throw ValidationError("scenario: source angles must lie in (-pi/2, pi/2)");
  if (kind == ModelKind::mean && alpha.size() != 2)
    throw ValidationError("scenario: mean model needs two amplitudes");
  if (kind == ModelKind::covariance && (r_alpha.rows() != 2 || r_alpha.cols() != 2))
    throw ValidationError("scenario: covariance model needs a 2 x 2 source covariance");
  if (snapshots < 1) throw ValidationError("scenario: snapshots must be >= 1");
  if (snr_grid_db.empty()) throw ValidationError("scenario: SNR grid is empty");
  for (std::size_t i = 1; i < snr_grid_db.size(); ++i)
    if (!(snr_grid_db[i] > snr_grid_db[i - 1])) throw ValidationError("scenario: SNR grid must be strictly increasing");
  if (trials < 1) throw ValidationError("scenario: trials must be >= 1");
  if (!(estimator.points_per_rayleigh >= 2.0)) throw ValidationError("scenario: need >= 2 grid points per Rayleigh width");
  if (!(estimator.refine_step > 0.0)) throw ValidationError("scenario: refinement step must be > 0");
}

double Scenario::sigma2_at(double snr_db) const {
  const double power = kind == ModelKind::mean ? std::norm(alpha(0)) : r_alpha(0, 0).real();
  return power / db_to_linear(snr_db);
}

MeanModel Scenario::mean_model(double snr_db) const {
  MeanModel m{dense_positions(), thetas, alpha, sigma2_at(snr_db)};
  m.validate();
  return m;
}

CovarianceModel Scenario::cov_model(double snr_db) const {
  CovarianceModel m{dense_positions(), thetas, r_alpha, sigma2_at(snr_db)};
  m.validate();
  return m;
}

MatrixXcd simulate_snapshots(const Scenario& scenario, const CompressionOperator& psi, std::size_t snr_index,
                             std::size_t trial_index) {
  const double sigma2 = scenario.sigma2_at(scenario.snr_grid_db.at(snr_index));
  const ElementPositions dense = scenario.dense_positions();
  const MatrixXcd k = mode_matrix(dense, scenario.thetas);
  auto eng = make_stream(scenario.master_seed, snr_index, trial_index);

  MatrixXcd y(scenario.n, scenario.snapshots);
  if (scenario.kind == ModelKind::mean) {
    y.colwise() = k * scenario.alpha;
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(scenario.r_alpha);
    const MatrixXcd factor = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    y = k * (factor * complex_normal_matrix(2, scenario.snapshots, 1.0, eng));
  }
  if (sigma2 > 0.0) y += complex_normal_matrix(scenario.n, scenario.snapshots, sigma2, eng);
  if (psi.kind == CompressionKind::identity) return y;
  return psi.matrix * y;
}

// ---------------------------------------------------------------------------
// ML estimation

struct MlEstimator::DataStats {
  const MatrixXcd* w = nullptr;
  double scale = 1.0;    // S = scale * W W^H
  double trace_s = 0.0;
  MatrixXcd grid_cross;  // A^H S A
};

MlEstimator::MlEstimator(ElementPositions dense, CompressionOperator psi, ModelKind kind, EstimatorOptions options)
    : dense_(std::move(dense)), psi_(std::move(psi)), kind_(kind), options_(options) {
  if (psi_.cols() != dense_.size()) throw ValidationError("ML estimator: compressor does not match the dense array");
  if (psi_.rows() < 3) throw ValidationError("ML estimator: need m >= 3 for two sources");
  const double rayleigh = 2.0 * kPi / static_cast<double>(dense_.back() + 1);
  const auto cells = static_cast<int>(std::ceil(kPi / (rayleigh / options_.points_per_rayleigh)));
  grid_step_ = kPi / cells;
  for (int k = 1; k < cells; ++k) grid_.push_back(-kPi / 2 + k * grid_step_);

  grid_modes_.resize(psi_.rows(), static_cast<Index>(grid_.size()));
  for (std::size_t g = 0; g < grid_.size(); ++g) grid_modes_.col(static_cast<Index>(g)) = mode(grid_[g]);
  grid_gram_ = grid_modes_.adjoint() * grid_modes_;
}

VectorXcd MlEstimator::mode(double theta) const {
  switch (psi_.kind) {
    case CompressionKind::identity: return steering_vector(dense_, theta);
    case CompressionKind::selection: return steering_vector(*psi_.source_positions, theta);
    case CompressionKind::whitened_random: break;
  }
  return psi_.matrix * steering_vector(dense_, theta);
}

MlEstimator::DataStats MlEstimator::stats(const MatrixXcd& w) const {
  DataStats s;
  s.w = &w;
  s.scale = kind_ == ModelKind::covariance ? 1.0 / static_cast<double>(w.cols()) : 1.0;
  s.trace_s = s.scale * w.squaredNorm();
  const MatrixXcd proj = grid_modes_.adjoint() * w;
  s.grid_cross = s.scale * (proj * proj.adjoint());
  return s;
}

double MlEstimator::evaluate(const Eigen::Matrix2cd& gram, const Eigen::Matrix2cd& b, const DataStats& s) const {
  const double g00 = gram(0, 0).real();
  const double g11 = gram(1, 1).real();
  const double det = g00 * g11 - std::norm(gram(0, 1));
  if (!(det > 1e-10 * g00 * g11)) return kNegInf;
  // tr(G^{-1} B) = tr(P_H S)
  const double fit = (g11 * b(0, 0).real() + g00 * b(1, 1).real() - 2.0 * (gram(0, 1) * b(1, 0)).real()) / det;
  if (kind_ == ModelKind::mean || options_.cov_criterion == CovCriterion::deterministic) return fit;

  // Concentrated stochastic likelihood with the signal covariance projected to PSD.
  const double m_minus_p = static_cast<double>(psi_.rows() - 2);
  const double sigma2 = std::max((s.trace_s - fit) / m_minus_p, 1e-12 * s.trace_s);
  const Eigen::Matrix2cd ginv = gram.inverse();
  Eigen::Matrix2cd p_hat = ginv * b * ginv - sigma2 * ginv;
  p_hat = 0.5 * (p_hat + p_hat.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> eig(p_hat);
  const Eigen::Matrix2cd p_psd =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).asDiagonal() * eig.eigenvectors().adjoint();
  const Eigen::LLT<Eigen::Matrix2cd> llt(gram);
  const Eigen::Matrix2cd l = llt.matrixL();
  const Eigen::Matrix2cd l_inv = l.inverse();
  const Eigen::Matrix2cd restricted = l.adjoint() * p_psd * l + sigma2 * Eigen::Matrix2cd::Identity();
  const Eigen::Matrix2cd data = l_inv * b * l_inv.adjoint();
  const double log_det = std::log(restricted.determinant().real());
  const double fit_term = (restricted.inverse() * data).trace().real();
  return -(log_det + fit_term + m_minus_p * std::log(sigma2));
}

double MlEstimator::criterion(const DataStats& s, double a, double b) const {
  Eigen::Matrix<cd, Eigen::Dynamic, 2> h(psi_.rows(), 2);
  h.col(0) = mode(a);
  h.col(1) = mode(b);
  const Eigen::Matrix2cd gram = h.adjoint() * h;
  const Eigen::Matrix<cd, 2, Eigen::Dynamic> proj = h.adjoint() * *s.w;
  const Eigen::Matrix2cd cross = s.scale * (proj * proj.adjoint());
  return evaluate(gram, cross, s);
}

double MlEstimator::criterion(const MatrixXcd& w, double a, double b) const {
  DataStats s;
  s.w = &w;
  s.scale = kind_ == ModelKind::covariance ? 1.0 / static_cast<double>(w.cols()) : 1.0;
  s.trace_s = s.scale * w.squaredNorm();
  return criterion(s, a, b);
}

std::array<double, 2> MlEstimator::estimate(const MatrixXcd& w) const {
  if (w.rows() != psi_.rows()) throw ValidationError("ML estimator: snapshot dimension mismatch");
  const DataStats s = stats(w);
  const auto count = static_cast<Index>(grid_.size());

  double best = kNegInf;
  Index best_i = 0;
  Index best_j = 1;
  for (Index i = 0; i < count; ++i) {
    for (Index j = i + 1; j < count; ++j) {
      Eigen::Matrix2cd gram;
      gram << grid_gram_(i, i), grid_gram_(i, j), grid_gram_(j, i), grid_gram_(j, j);
      Eigen::Matrix2cd cross;
      cross << s.grid_cross(i, i), s.grid_cross(i, j), s.grid_cross(j, i), s.grid_cross(j, j);
      const double value = evaluate(gram, cross, s);
      if (value > best) {
        best = value;
        best_i = i;
        best_j = j;
      }
    }
  }

  // Compass search around the best grid pair.
  double a = grid_[static_cast<std::size_t>(best_i)];
  double b = grid_[static_cast<std::size_t>(best_j)];
  static constexpr int kDirs[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {-1, -1}, {1, -1}, {-1, 1}};
  double step = 0.5 * grid_step_;
  while (step >= 0.5 * options_.refine_step) {
    bool moved = false;
    for (const auto& d : kDirs) {
      const double ca = a + d[0] * step;
      const double cb = b + d[1] * step;
      if (!(ca > -kPi / 2 && cb < kPi / 2 && ca < cb)) continue;
      const double value = criterion(s, ca, cb);
      if (value > best) {
        best = value;
        a = ca;
        b = cb;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return {a, b};
}

std::array<double, 2> ml_estimate(const MatrixXcd& w, const Scenario& scenario, const CompressionOperator& psi) {
  const MlEstimator est(scenario.dense_positions(), psi, scenario.kind, scenario.estimator);
  return est.estimate(w);
}

double associate_theta1(const std::array<double, 2>& estimates, const std::vector<double>& truth) {
  const double keep = std::pow(estimates[0] - truth[0], 2) + std::pow(estimates[1] - truth[1], 2);
  const double swap = std::pow(estimates[1] - truth[0], 2) + std::pow(estimates[0] - truth[1], 2);
  return keep <= swap ? estimates[0] : estimates[1];
}

// ---------------------------------------------------------------------------
// Cramer-Rao bounds

namespace {

double inverse_corner(const MatrixXd& fim) {
  Eigen::FullPivLU<MatrixXd> lu(fim);
  lu.setThreshold(1e-13);
  if (!lu.isInvertible()) throw DegeneracyError("Fisher information is singular (coincident sources?)");
  const MatrixXd inv = lu.inverse();
  if (!(inv(0, 0) > 0.0) || !std::isfinite(inv(0, 0)))
    throw DegeneracyError("Fisher information is numerically singular");
  return inv(0, 0);
}

MatrixXcd derivative_matrix(const Scenario& scenario) {
  const ElementPositions dense = scenario.dense_positions();
  MatrixXcd dk(scenario.n, static_cast<Index>(scenario.thetas.size()));
  for (Index i = 0; i < dk.cols(); ++i) dk.col(i) = steering_derivative(dense, scenario.thetas[static_cast<std::size_t>(i)]);
  return dk;
}

// h = Psi K and d = Psi dK/dtheta.
double crb_from_modes(const Scenario& scenario, const MatrixXcd& h, const MatrixXcd& d, double snr_db) {
  const double sigma2 = scenario.sigma2_at(snr_db);
  const Index p = h.cols();
  const Index m = h.rows();
  const double snapshots = scenario.snapshots;

  if (scenario.kind == ModelKind::mean) {
    const MatrixXcd gram = h.adjoint() * h;
    const MatrixXcd perp = MatrixXcd::Identity(m, m) - h * gram.ldlt().solve(h.adjoint());
    const MatrixXcd dpd = d.adjoint() * perp * d;
    const MatrixXcd aa = scenario.alpha * scenario.alpha.adjoint();
    const MatrixXd fim = (2.0 * snapshots / sigma2) * dpd.cwiseProduct(aa.transpose()).real();
    return inverse_corner(fim);
  }

  // Slepian-Bangs: parameters theta (p), R_alpha (p real diagonal, p(p-1) real off-diagonal), sigma2.
  const MatrixXcd& ra = scenario.r_alpha;
  const MatrixXcd r = h * ra * h.adjoint() + sigma2 * MatrixXcd::Identity(m, m);
  const MatrixXcd r_inv = r.ldlt().solve(MatrixXcd::Identity(m, m));
  std::vector<MatrixXcd> derivs;
  for (Index i = 0; i < p; ++i) {
    MatrixXcd di = MatrixXcd::Zero(m, p);
    di.col(i) = d.col(i);
    const MatrixXcd t = di * ra * h.adjoint();
    derivs.push_back(t + t.adjoint());
  }
  for (Index i = 0; i < p; ++i) derivs.push_back(h.col(i) * h.col(i).adjoint());
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j) {
      const MatrixXcd cross = h.col(i) * h.col(j).adjoint();
      derivs.push_back(cross + cross.adjoint());
      derivs.push_back(cd(0, 1) * (cross - cross.adjoint()));
    }
  derivs.push_back(MatrixXcd::Identity(m, m));

  std::vector<MatrixXcd> whitened;
  for (const auto& dr : derivs) whitened.push_back(r_inv * dr);
  const auto count = static_cast<Index>(derivs.size());
  MatrixXd fim(count, count);
  for (Index i = 0; i < count; ++i)
    for (Index j = i; j < count; ++j) {
      const double v =
          snapshots * (whitened[static_cast<std::size_t>(i)].cwiseProduct(whitened[static_cast<std::size_t>(j)].transpose()))
                          .sum()
                          .real();
      fim(i, j) = v;
      fim(j, i) = v;
    }
  return inverse_corner(fim);
}

}  // namespace

double crb_theta1(const Scenario& scenario, const CompressionOperator& psi, double snr_db) {
  const MatrixXcd k = mode_matrix(scenario.dense_positions(), scenario.thetas);
  return crb_from_modes(scenario, psi.matrix * k, psi.matrix * derivative_matrix(scenario), snr_db);
}

double crb_theta1_uncompressed(const Scenario& scenario, double snr_db) {
  return crb_from_modes(scenario, mode_matrix(scenario.dense_positions(), scenario.thetas),
                        derivative_matrix(scenario), snr_db);
}

// ---------------------------------------------------------------------------
// Sweeps

MseCurve mse_sweep(const Scenario& scenario) {
  scenario.validate();
  const CompressionOperator psi = make_compressor(scenario.array, scenario.n);
  const MlEstimator estimator(scenario.dense_positions(), psi, scenario.kind, scenario.estimator);
  const std::size_t grid = scenario.snr_grid_db.size();
  const auto trials = static_cast<std::size_t>(scenario.trials);

  // The subspace split and minimum mode do not depend on sigma2.
  SubspaceSplit split;
  VectorXcd rho;
  if (scenario.kind == ModelKind::mean) {
    const CompressedModes modes = compressed_modes_mean(scenario.mean_model(0.0), psi);
    split = subspace_split_mean(modes);
    rho = hmin_mean(modes).rho;
  } else {
    const CompressedModes modes = compressed_modes_cov(scenario.cov_model(0.0), psi);
    split = subspace_split_cov(modes);
    rho = hmin_cov(modes).rho;
  }
  const SwapEvent event = scenario.default_event();

  std::vector<std::array<double, 2>> estimates(grid * trials);
  std::vector<double> sq_error(grid * trials);
  std::vector<char> swapped(grid * trials);
  parallel_for(grid * trials, [&](std::size_t idx) {
    const std::size_t s = idx / trials;
    const std::size_t t = idx % trials;
    const MatrixXcd w = simulate_snapshots(scenario, psi, s, t);
    estimates[idx] = estimator.estimate(w);
    const double err = associate_theta1(estimates[idx], scenario.thetas) - scenario.thetas[0];
    sq_error[idx] = err * err;
    swapped[idx] = event_statistic(w, split, rho, event).value > 0.0;
  });

  MseCurve out;
  out.label = scenario.array.label;
  for (std::size_t s = 0; s < grid; ++s) {
    MsePoint pt;
    pt.snr_db = scenario.snr_grid_db[s];
    pt.trials = scenario.trials;
    pt.mse = pairwise_sum(sq_error.data() + s * trials, trials) / static_cast<double>(trials);
    long flags = 0;
    for (std::size_t t = 0; t < trials; ++t) flags += swapped[s * trials + t];
    pt.swap_frequency = static_cast<double>(flags) / static_cast<double>(trials);
    out.points.push_back(pt);
    out.estimates.emplace_back(estimates.begin() + static_cast<std::ptrdiff_t>(s * trials),
                               estimates.begin() + static_cast<std::ptrdiff_t>((s + 1) * trials));
  }
  return out;
}

std::vector<double> crb_curve(const Scenario& scenario, const CompressionOperator& psi) {
  std::vector<double> out;
  for (double snr : scenario.snr_grid_db) out.push_back(crb_theta1(scenario, psi, snr));
  return out;
}

std::vector<double> pss_bound_curve(const Scenario& scenario, const CompressionOperator& psi,
                                    std::optional<SwapEvent> event) {
  const SwapEvent e = event.value_or(scenario.default_event());
  std::vector<double> out;
  for (double snr : scenario.snr_grid_db) {
    if (scenario.kind == ModelKind::mean)
      out.push_back(swap_bound(scenario.mean_model(snr), psi, e, scenario.snapshots).probability);
    else
      out.push_back(swap_bound(scenario.cov_model(snr), psi, e, scenario.snapshots).probability);
  }
  return out;
}

std::vector<double> method_of_intervals(const std::vector<double>& pss, const std::vector<double>& crb) {
  if (pss.size() != crb.size()) throw ValidationError("method of intervals: SNR grids do not align");
  std::vector<double> out(pss.size());
  for (std::size_t i = 0; i < pss.size(); ++i) out[i] = pss[i] * kSwapErrorVariance + (1.0 - pss[i]) * crb[i];
  return out;
}

double threshold_snr(const std::vector<double>& snr_grid_db, const std::vector<double>& curve,
                     const std::vector<double>& crb, double multiplier) {
  if (snr_grid_db.size() != curve.size() || curve.size() != crb.size() || curve.empty())
    throw ValidationError("threshold: curves must share a nonempty SNR grid");
  if (!(multiplier > 0.0)) throw ValidationError("threshold: multiplier must be > 0");
  const double limit_db = 10.0 * std::log10(multiplier);
  std::vector<double> excess(curve.size());
  for (std::size_t i = 0; i < curve.size(); ++i) excess[i] = 10.0 * std::log10(curve[i] / crb[i]) - limit_db;

  std::optional<std::size_t> last_fail;
  for (std::size_t i = 0; i < excess.size(); ++i)
    if (excess[i] > 0.0) last_fail = i;
  if (!last_fail) return snr_grid_db.front();
  if (*last_fail + 1 == excess.size()) throw NoThresholdError();
  const std::size_t k = *last_fail;
  const double frac = excess[k] / (excess[k] - excess[k + 1]);
  return snr_grid_db[k] + frac * (snr_grid_db[k + 1] - snr_grid_db[k]);
}

ThresholdReport make_threshold_report(std::vector<ArrayThreshold> arrays, Index dense_elements,
                                      Index compressed_elements) {
  ThresholdReport r;
  r.arrays = std::move(arrays);
  r.predicted_delta_db = 10.0 * std::log10(static_cast<double>(dense_elements) / compressed_elements);
  if (r.arrays.size() >= 2 && r.arrays[0].threshold_snr_db && r.arrays[1].threshold_snr_db)
    r.delta_db = *r.arrays[1].threshold_snr_db - *r.arrays[0].threshold_snr_db;
  return r;
}

}  // namespace swapbound
