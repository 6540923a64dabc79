#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sfd {

using Real = double;
using Index = Eigen::Index;

using Vec3 = Eigen::Matrix<Real, 3, 1>;
using Mat3 = Eigen::Matrix<Real, 3, 3>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

// Rows are points / index triples.
using PointMatrix = Eigen::Matrix<Real, Eigen::Dynamic, 3>;
using TriangleMatrix = Eigen::Matrix<int, Eigen::Dynamic, 3>;

template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3T = Eigen::Matrix<Scalar, 3, 3>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Coefficient layout for vector fields on N panels: component-interleaved,
// entry 3*p + c holds component c of the field on panel p.
inline Index vec_index(Index panel, Index component) { return 3 * panel + component; }

}  // namespace sfd
