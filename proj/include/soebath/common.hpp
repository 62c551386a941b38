#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace soebath {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Error norm used to state an accuracy target on [0, T].
enum class Norm { L1, Linf };

/// Raised for violated preconditions and unrecoverable numerical failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a point lands on (or numerically next to) a pole of a statistics
/// factor; signals a misconfigured contour rather than a bad model.
class PoleProximityError : public Error {
 public:
  using Error::Error;
};

/// Scalar reference function t -> Delta(t).
using ScalarReference = std::function<cplx(double)>;

std::string to_string(Norm norm);
Norm norm_from_string(const std::string& s);

inline void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

}  // namespace soebath
