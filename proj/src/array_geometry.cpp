#include "swapbound/array_geometry.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <string>

namespace swapbound {

ElementPositions::ElementPositions(std::vector<int> positions) : positions_(std::move(positions)) {
  if (positions_.empty()) throw ValidationError("element positions must be nonempty");
  if (positions_.front() != 0) throw ValidationError("element positions must start at 0");
  for (std::size_t i = 1; i < positions_.size(); ++i)
    if (positions_[i] <= positions_[i - 1])
      throw ValidationError("element positions must be strictly increasing");
}

ElementPositions ElementPositions::dense(int n) {
  if (n < 1) throw ValidationError("dense array needs at least one element");
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return ElementPositions(std::move(p));
}

VectorXcd steering_vector(const ElementPositions& positions, double theta) {
  VectorXcd k(positions.size());
  for (Index i = 0; i < k.size(); ++i) k(i) = std::polar(1.0, positions[static_cast<std::size_t>(i)] * theta);
  return k;
}

VectorXcd steering_derivative(const ElementPositions& positions, double theta) {
  VectorXcd d(positions.size());
  for (Index i = 0; i < d.size(); ++i) {
    const double p = positions[static_cast<std::size_t>(i)];
    d(i) = cd(0.0, p) * std::polar(1.0, p * theta);
  }
  return d;
}

MatrixXcd mode_matrix(const ElementPositions& positions, const std::vector<double>& thetas) {
  MatrixXcd k(positions.size(), static_cast<Index>(thetas.size()));
  for (std::size_t c = 0; c < thetas.size(); ++c) k.col(static_cast<Index>(c)) = steering_vector(positions, thetas[c]);
  return k;
}

ElementPositions coprime_positions(int m1, int m2) {
  if (m1 < 1 || m2 < 1) throw ValidationError("co-prime factors must be positive");
  if (std::gcd(m1, m2) != 1)
    throw ValidationError("co-prime factors " + std::to_string(m1) + ", " + std::to_string(m2) +
                          " share a common divisor");
  std::set<int> merged;
  for (int k = 0; k < 2 * m2; ++k) merged.insert(k * m1);
  for (int k = 0; k < m1; ++k) merged.insert(k * m2);
  return ElementPositions(std::vector<int>(merged.begin(), merged.end()));
}

CompressionOperator identity_compressor(Index n) {
  if (n < 1) throw ValidationError("identity compressor needs n >= 1");
  return {MatrixXcd::Identity(n, n), CompressionKind::identity, std::nullopt};
}

CompressionOperator selection_compressor(const ElementPositions& positions, Index n) {
  if (positions.back() >= n)
    throw ValidationError("selected position " + std::to_string(positions.back()) +
                          " lies outside a dense array of " + std::to_string(n));
  MatrixXcd psi = MatrixXcd::Zero(positions.size(), n);
  for (Index r = 0; r < positions.size(); ++r) psi(r, positions[static_cast<std::size_t>(r)]) = 1.0;
  return {std::move(psi), CompressionKind::selection, positions};
}

CompressionOperator random_whitened_compressor(Index m, Index n, std::uint64_t seed) {
  if (m < 1 || m > n) throw ValidationError("random compressor needs 1 <= m <= n");
  for (std::uint64_t attempt = 0; attempt < 3; ++attempt) {
    auto eng = make_stream(seed, 0x5713FE1ULL, attempt);
    const MatrixXcd phi = complex_normal_matrix(m, n, 1.0, eng);
    const MatrixXcd gram = phi * phi.adjoint();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(gram);
    const VectorXd& ev = eig.eigenvalues();
    if (eig.info() != Eigen::Success || ev.minCoeff() <= 1e-12 * ev.maxCoeff()) continue;
    const MatrixXcd inv_sqrt =
        eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().adjoint();
    return {inv_sqrt * phi, CompressionKind::whitened_random, std::nullopt};
  }
  throw DegeneracyError("random compressor: Phi Phi^H numerically singular after 3 draws");
}

double orthonormality_defect(const MatrixXcd& psi) {
  return (psi * psi.adjoint() - MatrixXcd::Identity(psi.rows(), psi.rows())).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// JSON

void to_json(nlohmann::json& j, const ElementPositions& p) { j = p.values(); }

void from_json(const nlohmann::json& j, ElementPositions& p) {
  p = ElementPositions(j.get<std::vector<int>>());
}

nlohmann::json matrix_to_json(const MatrixXcd& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) data.push_back({m(r, c).real(), m(r, c).imag()});
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

MatrixXcd matrix_from_json(const nlohmann::json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw ValidationError("matrix JSON: data length does not match rows*cols");
  MatrixXcd m(rows, cols);
  std::size_t k = 0;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c, ++k) {
      const auto& pair = data[k];
      if (!pair.is_array() || pair.size() != 2) throw ValidationError("matrix JSON: entries are [re, im]");
      m(r, c) = cd(pair[0].get<double>(), pair[1].get<double>());
    }
  return m;
}

namespace {
const char* kind_name(CompressionKind k) {
  switch (k) {
    case CompressionKind::identity: return "identity";
    case CompressionKind::selection: return "selection";
    case CompressionKind::whitened_random: return "whitened-random";
  }
  return "identity";
}
}  // namespace

void to_json(nlohmann::json& j, const CompressionOperator& op) {
  j = {{"kind", kind_name(op.kind)}, {"matrix", matrix_to_json(op.matrix)}};
  if (op.source_positions) j["source_positions"] = *op.source_positions;
}

void from_json(const nlohmann::json& j, CompressionOperator& op) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "identity")
    op.kind = CompressionKind::identity;
  else if (kind == "selection")
    op.kind = CompressionKind::selection;
  else if (kind == "whitened-random")
    op.kind = CompressionKind::whitened_random;
  else
    throw ValidationError("unknown compressor kind '" + kind + "'");
  op.matrix = matrix_from_json(j.at("matrix"));
  op.source_positions.reset();
  if (j.contains("source_positions")) op.source_positions = j.at("source_positions").get<ElementPositions>();
  if (op.rows() > op.cols() || orthonormality_defect(op.matrix) > 1e-10)
    throw ValidationError("compressor JSON: rows are not orthonormal");
}

}  // namespace swapbound
