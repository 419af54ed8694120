#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gnt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Every failure the library surfaces derives from Error, so callers (and the
// CLI) can map input problems vs. runtime trouble to distinct exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error { using Error::Error; };
struct NonBinaryAdjacency : Error { using Error::Error; };
struct AsymmetricAdjacency : Error { using Error::Error; };
struct SelfLoop : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct LagTooLarge : Error { using Error::Error; };
struct LagCountMismatch : Error { using Error::Error; };
struct CyclicW : Error { using Error::Error; };
struct NumericalOverflow : Error { using Error::Error; };
struct InvalidConfig : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

inline bool is_binary01(const Matrix& m) {
  return ((m.array() == 0.0) || (m.array() == 1.0)).all();
}

}  // namespace gnt
