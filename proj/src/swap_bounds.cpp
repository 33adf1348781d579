#include "swapbound/swap_bounds.hpp"

#include "swapbound/distributions.hpp"

#include <cmath>

namespace swapbound {

std::string to_string(SwapEvent e) { return e == SwapEvent::F ? "F" : "G"; }
std::string to_string(ModelKind k) { return k == ModelKind::mean ? "mean" : "covariance"; }

SwapEvent parse_event(const std::string& s) {
  if (s == "F") return SwapEvent::F;
  if (s == "G") return SwapEvent::G;
  throw ValidationError("unknown swap event '" + s + "' (expected F or G)");
}

double model_snr_db(const MeanModel& model) {
  return 10.0 * std::log10(std::norm(model.alpha(0)) / model.sigma2);
}

double model_snr_db(const CovarianceModel& model) {
  return 10.0 * std::log10(model.r_alpha(0, 0).real() / model.sigma2);
}

namespace {

void require_snapshots(int snapshots) {
  if (snapshots < 1) throw ValidationError("snapshot count must be >= 1");
}

int orthogonal_dim(const CompressedModes& modes) {
  const Index extra = modes.m() - modes.p();
  if (extra < 1) throw DegeneracyError("m = p: no orthogonal subspace to swap with");
  return static_cast<int>(extra);
}

SwapBound mean_bound(const MeanModel& model, const CompressedModes& modes, SwapEvent event, int snapshots,
                     double scale, bool compressed) {
  require_snapshots(snapshots);
  const int extra = orthogonal_dim(modes);
  subspace_split_mean(modes);  // rank check only

  SwapBound out;
  out.event = event;
  out.model = ModelKind::mean;
  out.snr_db = model_snr_db(model);
  out.compressed = compressed;
  const int p = static_cast<int>(modes.p());
  const VectorXcd& z = *modes.z;

  double energy = 0.0;
  if (event == SwapEvent::F) {
    out.dist.num_dof = 2 * p * snapshots;
    energy = z.squaredNorm();
  } else {
    out.dist.num_dof = 2 * snapshots;
    energy = std::norm(hmin_mean(modes).rho.dot(z));
  }
  out.dist.den_dof = 2 * extra * snapshots;
  out.dist.noncentrality = scale * snapshots * energy / model.sigma2;
  out.dist.threshold = 1.0;
  const Dof d1(out.dist.num_dof);
  const Dof d2(out.dist.den_dof);
  const Noncentrality nc(out.dist.noncentrality);
  out.log_probability = log_noncentral_f_cdf(1.0, d1, d2, nc);
  out.probability = nc.value() == 0.0 ? f_cdf(1.0, d1, d2) : std::exp(out.log_probability);
  return out;
}

SwapBound cov_bound(const CovarianceModel& model, const CompressedModes& modes, SwapEvent event, int snapshots,
                    bool compressed) {
  require_snapshots(snapshots);
  const int extra = orthogonal_dim(modes);
  const SubspaceSplit split = subspace_split_cov(modes);

  SwapBound out;
  out.event = event;
  out.model = ModelKind::covariance;
  out.snr_db = model_snr_db(model);
  out.compressed = compressed;
  const int p = static_cast<int>(modes.p());
  out.dist.den_dof = 2 * snapshots * extra;

  if (event == SwapEvent::F) {
    out.dist.num_dof = 2 * snapshots * p;
    for (Index i = 0; i < split.spectrum.size(); ++i)
      out.dist.weights.push_back(1.0 + std::max(0.0, split.spectrum(i)) / model.sigma2);
    const QuadformResult r = generalized_f_below_one(out.dist.weights, Dof(2 * snapshots), Dof(out.dist.den_dof));
    out.probability = r.probability;
    out.dist.accuracy = r.error_estimate;
    out.log_probability = std::log(r.probability);
  } else {
    out.dist.num_dof = 2 * snapshots;
    const VectorXcd rho = hmin_cov(modes).rho;
    const double tau = rho.dot(*modes.r_zz * rho).real() + model.sigma2;
    out.dist.threshold = model.sigma2 / tau;
    const Dof d1(out.dist.num_dof);
    const Dof d2(out.dist.den_dof);
    out.probability = f_cdf(out.dist.threshold, d1, d2);
    out.log_probability = log_f_cdf(out.dist.threshold, d1, d2);
  }
  return out;
}

}  // namespace

namespace detail {
SwapBound mean_bound_with_scale(const MeanModel& model, const CompressionOperator& psi, SwapEvent event,
                                int snapshots, double scale) {
  return mean_bound(model, compressed_modes_mean(model, psi), event, snapshots, scale, true);
}
}  // namespace detail

SwapBound swap_bound(const MeanModel& model, const CompressionOperator& psi, SwapEvent event, int snapshots) {
  return mean_bound(model, compressed_modes_mean(model, psi), event, snapshots, kNoncentralityScale, true);
}

SwapBound swap_bound(const CovarianceModel& model, const CompressionOperator& psi, SwapEvent event,
                     int snapshots) {
  return cov_bound(model, compressed_modes_cov(model, psi), event, snapshots, true);
}

SwapBound swap_bound_uncompressed(const MeanModel& model, SwapEvent event, int snapshots) {
  return mean_bound(model, uncompressed_modes_mean(model), event, snapshots, kNoncentralityScale, false);
}

SwapBound swap_bound_uncompressed(const CovarianceModel& model, SwapEvent event, int snapshots) {
  return cov_bound(model, uncompressed_modes_cov(model), event, snapshots, false);
}

SwapBound bound_F_mean(const MeanModel& model, const CompressionOperator& psi, int snapshots) {
  return swap_bound(model, psi, SwapEvent::F, snapshots);
}
SwapBound bound_G_mean(const MeanModel& model, const CompressionOperator& psi, int snapshots) {
  return swap_bound(model, psi, SwapEvent::G, snapshots);
}
SwapBound bound_F_cov(const CovarianceModel& model, const CompressionOperator& psi, int snapshots) {
  return swap_bound(model, psi, SwapEvent::F, snapshots);
}
SwapBound bound_G_cov(const CovarianceModel& model, const CompressionOperator& psi, int snapshots) {
  return swap_bound(model, psi, SwapEvent::G, snapshots);
}

// ---------------------------------------------------------------------------
// Event statistics

EventStatistic event_statistic(const MatrixXcd& w, const SubspaceSplit& split, const VectorXcd& rho_min,
                               SwapEvent event) {
  const double total = w.squaredNorm();
  const double signal = (split.u_p.adjoint() * w).squaredNorm();
  const double orthogonal = total - signal;  // [U_p | U_0] is unitary
  const double m_minus_p = static_cast<double>(split.u_0.cols());
  EventStatistic out{event, 0.0};
  if (event == SwapEvent::F)
    out.value = orthogonal / m_minus_p - signal / static_cast<double>(split.u_p.cols());
  else
    out.value = orthogonal / m_minus_p - (rho_min.adjoint() * w).squaredNorm();
  return out;
}

bool swap_event_e1(const MatrixXcd& w, const CompressedModes& modes, const SubspaceSplit& split) {
  double weakest_mode = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < modes.p(); ++i) {
    const VectorXcd u = modes.h.col(i).normalized();
    weakest_mode = std::min(weakest_mode, (u.adjoint() * w).squaredNorm());
  }
  const MatrixXcd y = split.u_0.adjoint() * w;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(y * y.adjoint(), Eigen::EigenvaluesOnly);
  return weakest_mode < eig.eigenvalues().maxCoeff();
}

namespace {

// Draw setup shared by the Monte-Carlo routines.
struct EventSetup {
  CompressedModes modes;
  SubspaceSplit split;
  VectorXcd rho_min;
  MatrixXcd alpha_factor;  // covariance: A with A A^H = R_alpha
  double sigma2 = 1.0;
  bool mean = true;
};

EventSetup setup_for(const MeanModel& model, const CompressionOperator& psi) {
  EventSetup s;
  s.modes = compressed_modes_mean(model, psi);
  s.split = subspace_split_mean(s.modes);
  s.rho_min = hmin_mean(s.modes).rho;
  s.sigma2 = model.sigma2;
  s.mean = true;
  return s;
}

EventSetup setup_for(const CovarianceModel& model, const CompressionOperator& psi) {
  EventSetup s;
  s.modes = compressed_modes_cov(model, psi);
  s.split = subspace_split_cov(s.modes);
  s.rho_min = hmin_cov(s.modes).rho;
  s.sigma2 = model.sigma2;
  s.mean = false;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(model.r_alpha);
  s.alpha_factor = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  return s;
}

MatrixXcd draw_snapshots(const EventSetup& s, int snapshots, StreamEngine& eng) {
  const Index m = s.modes.m();
  MatrixXcd w = complex_normal_matrix(m, snapshots, s.sigma2, eng);
  if (s.mean) {
    w.colwise() += *s.modes.z;
  } else {
    const MatrixXcd a = s.alpha_factor * complex_normal_matrix(s.modes.p(), snapshots, 1.0, eng);
    w += s.modes.h * a;
  }
  return w;
}

McEstimate summarize(long hits, long trials) {
  McEstimate e;
  e.trials = trials;
  e.hits = hits;
  e.probability = static_cast<double>(hits) / trials;
  e.std_error = std::sqrt(e.probability * (1.0 - e.probability) / trials);
  return e;
}

McEstimate run_event_mc(const EventSetup& s, int snapshots, SwapEvent event, long trials, std::uint64_t seed) {
  require_snapshots(snapshots);
  if (trials < 100) throw ValidationError("Monte-Carlo event check needs >= 100 trials");
  orthogonal_dim(s.modes);
  std::vector<char> hit(static_cast<std::size_t>(trials), 0);
  parallel_for(hit.size(), [&](std::size_t t) {
    auto eng = make_stream(seed, t);
    const MatrixXcd w = draw_snapshots(s, snapshots, eng);
    hit[t] = event_statistic(w, s.split, s.rho_min, event).value > 0.0;
  });
  long hits = 0;
  for (char h : hit) hits += h;
  return summarize(hits, trials);
}

McEventFrequencies run_frequencies(const EventSetup& s, int snapshots, long trials, std::uint64_t seed) {
  require_snapshots(snapshots);
  if (trials < 100) throw ValidationError("Monte-Carlo event check needs >= 100 trials");
  orthogonal_dim(s.modes);
  std::vector<unsigned char> flags(static_cast<std::size_t>(trials), 0);
  parallel_for(flags.size(), [&](std::size_t t) {
    auto eng = make_stream(seed, t);
    const MatrixXcd w = draw_snapshots(s, snapshots, eng);
    unsigned char f = 0;
    if (event_statistic(w, s.split, s.rho_min, SwapEvent::F).value > 0.0) f |= 1;
    if (event_statistic(w, s.split, s.rho_min, SwapEvent::G).value > 0.0) f |= 2;
    if (swap_event_e1(w, s.modes, s.split)) f |= 4;
    flags[t] = f;
  });
  long nf = 0, ng = 0, ne = 0;
  McEventFrequencies out;
  for (unsigned char f : flags) {
    nf += (f & 1) != 0;
    ng += (f & 2) != 0;
    ne += (f & 4) != 0;
    out.f_without_e1 += (f & 1) && !(f & 4);
    out.g_without_e1 += (f & 2) && !(f & 4);
  }
  out.f = summarize(nf, trials);
  out.g = summarize(ng, trials);
  out.e1 = summarize(ne, trials);
  return out;
}

template <class Model>
MarginalBound marginal(const Model& model, Index m, SwapEvent event, int snapshots, int draws, std::uint64_t seed) {
  if (draws < 1) throw ValidationError("marginal bound needs at least one compressor draw");
  MarginalBound out;
  out.values.resize(static_cast<std::size_t>(draws));
  parallel_for(out.values.size(), [&](std::size_t d) {
    const CompressionOperator psi = random_whitened_compressor(m, model.n(), splitmix64(seed + d));
    out.values[d] = swap_bound(model, psi, event, snapshots).probability;
  });
  out.mean = pairwise_sum(out.values) / draws;
  if (draws > 1) {
    std::vector<double> sq(out.values.size());
    for (std::size_t d = 0; d < sq.size(); ++d) sq[d] = (out.values[d] - out.mean) * (out.values[d] - out.mean);
    out.std_dev = std::sqrt(pairwise_sum(sq) / (draws - 1));
  }
  return out;
}

}  // namespace

McEstimate mc_event_probability(const MeanModel& model, const CompressionOperator& psi, int snapshots,
                                SwapEvent event, long trials, std::uint64_t seed) {
  return run_event_mc(setup_for(model, psi), snapshots, event, trials, seed);
}

McEstimate mc_event_probability(const CovarianceModel& model, const CompressionOperator& psi, int snapshots,
                                SwapEvent event, long trials, std::uint64_t seed) {
  return run_event_mc(setup_for(model, psi), snapshots, event, trials, seed);
}

McEventFrequencies mc_event_frequencies(const MeanModel& model, const CompressionOperator& psi, int snapshots,
                                        long trials, std::uint64_t seed) {
  return run_frequencies(setup_for(model, psi), snapshots, trials, seed);
}

McEventFrequencies mc_event_frequencies(const CovarianceModel& model, const CompressionOperator& psi,
                                        int snapshots, long trials, std::uint64_t seed) {
  return run_frequencies(setup_for(model, psi), snapshots, trials, seed);
}

MarginalBound marginal_bound_random_psi(const MeanModel& model, Index m, SwapEvent event, int snapshots,
                                        int draws, std::uint64_t seed) {
  return marginal(model, m, event, snapshots, draws, seed);
}

MarginalBound marginal_bound_random_psi(const CovarianceModel& model, Index m, SwapEvent event, int snapshots,
                                        int draws, std::uint64_t seed) {
  return marginal(model, m, event, snapshots, draws, seed);
}

}  // namespace swapbound
