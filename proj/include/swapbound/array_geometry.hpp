// Line-array geometry: element positions, mode vectors, compression operators.
#pragma once

#include "swapbound/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace swapbound {

/// Element positions in half-wavelength units: strictly increasing, starting at 0.
class ElementPositions {
 public:
  ElementPositions() = default;
  explicit ElementPositions(std::vector<int> positions);

  static ElementPositions dense(int n);

  const std::vector<int>& values() const noexcept { return positions_; }
  Index size() const noexcept { return static_cast<Index>(positions_.size()); }
  int back() const { return positions_.back(); }
  int operator[](std::size_t i) const { return positions_[i]; }
  friend bool operator==(const ElementPositions&, const ElementPositions&) = default;

 private:
  std::vector<int> positions_;
};

enum class CompressionKind { identity, selection, whitened_random };

/// Row-orthonormal m x n operator, Psi Psi^H = I_m.
struct CompressionOperator {
  MatrixXcd matrix;
  CompressionKind kind = CompressionKind::identity;
  std::optional<ElementPositions> source_positions;

  Index rows() const noexcept { return matrix.rows(); }
  Index cols() const noexcept { return matrix.cols(); }
  /// n / m
  double compression_ratio() const { return static_cast<double>(cols()) / rows(); }
};

/// Entries exp(j * position * theta); unnormalized, first entry 1 when positions start at 0.
VectorXcd steering_vector(const ElementPositions& positions, double theta);
/// d/dtheta of steering_vector.
VectorXcd steering_derivative(const ElementPositions& positions, double theta);
/// Columns are steering vectors at each theta.
MatrixXcd mode_matrix(const ElementPositions& positions, const std::vector<double>& thetas);

/// Union of {k*m1 : 0 <= k < 2*m2} and {k*m2 : 0 <= k < m1}; m1 + 2*m2 - 1 elements.
ElementPositions coprime_positions(int m1, int m2);

CompressionOperator identity_compressor(Index n);
CompressionOperator selection_compressor(const ElementPositions& positions, Index n);
/// (Phi Phi^H)^{-1/2} Phi with Phi i.i.d. CN(0,1); uniform on the complex Stiefel manifold.
CompressionOperator random_whitened_compressor(Index m, Index n, std::uint64_t seed);

/// max |Psi Psi^H - I| entrywise.
double orthonormality_defect(const MatrixXcd& psi);

void to_json(nlohmann::json& j, const ElementPositions& p);
void from_json(const nlohmann::json& j, ElementPositions& p);
void to_json(nlohmann::json& j, const CompressionOperator& op);
void from_json(const nlohmann::json& j, CompressionOperator& op);

/// Row-major [[re, im], ...] encoding shared by every matrix in the JSON formats.
nlohmann::json matrix_to_json(const MatrixXcd& m);
MatrixXcd matrix_from_json(const nlohmann::json& j);

}  // namespace swapbound
