#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "soebath/common.hpp"
#include "soebath/soe.hpp"

namespace soebath {

/// Uniform samples values[k] = Delta(k dt), k = 0..floor(T/dt).
struct SampleSet {
  std::vector<cplx> values;
  double dt = 0.01;
  double T = 0.0;
};

SampleSet sample(const ScalarReference& reference, double T, double dt);
SampleSet sample(const SoeRepresentation& soe, double T, double dt);

struct EspritOptions {
  /// Hankel row count is min(n/2, max_rows); every sample enters through the columns.
  std::size_t max_rows = 2048;
  /// Above this many samples the left singular vectors come from the Hankel Gram matrix.
  std::size_t dense_limit = 2048;
  /// Singular values below rank_tol * sigma_max count as zero.
  double rank_tol = 1e-13;
  /// Extra subspace dimensions kept beyond the largest requested N.
  std::size_t oversample = 10;
  int subspace_iterations = 6;
  std::uint64_t seed = 0x5eed;
};

/// Factorises the Hankel matrix once and fits any N up to max_modes.
class EspritFitter {
 public:
  EspritFitter(SampleSet samples, std::size_t max_modes, EspritOptions opts = {});

  const SampleSet& samples() const { return samples_; }
  std::size_t rows() const { return rows_; }
  std::size_t numerical_rank() const { return rank_; }
  const std::vector<double>& singular_values() const { return sigma_; }

  /// Fit with N modes. Throws when N exceeds the numerical rank.
  SoeRepresentation fit(std::size_t N) const;
  /// Growing modes clamped to the unit circle during the most recent fit.
  std::size_t clamped_modes() const { return clamped_; }

 private:
  SampleSet samples_;
  std::size_t max_modes_;
  EspritOptions opts_;
  std::size_t rows_ = 0;
  std::size_t rank_ = 0;
  Eigen::MatrixXcd U_;  // leading left singular vectors
  std::vector<double> sigma_;
  mutable std::size_t clamped_ = 0;
};

SoeRepresentation esprit(const SampleSet& samples, std::size_t N, const EspritOptions& opts = {});

/// Least-squares weights for fixed poles on the whole sample grid.
std::vector<cplx> fit_weights(const SampleSet& samples, const std::vector<cplx>& poles);

struct MinimalModes {
  std::size_t N = 0;
  SoeRepresentation soe;
  double error = 0.0;
  bool converged = false;
  std::vector<double> errors;  // L1 error for N = 1, 2, ...
};

/// Smallest N whose ESPRIT fit reaches Riemann L1 error <= eps on the sample grid.
MinimalModes minimal_modes(const SampleSet& samples, double eps, std::size_t n_max, const EspritOptions& opts = {});
MinimalModes minimal_modes(const ScalarReference& reference, double T, double eps, double dt, std::size_t n_max,
                           const EspritOptions& opts = {});

/// Refits `soe` with fewer terms when possible. The error budget is eps minus
/// the input's recorded achieved error; never returns more terms than the input.
SoeRepresentation compress(const SoeRepresentation& soe, double eps, double T, double dt);

/// Random N-term SOE for recovery tests: Im z in [-1, -0.01], |dt z| <= 1, weights of modulus
/// in [0.5, 2], and |dt (z_i - z_j)| >= min_separation for every pair.
SoeRepresentation synthetic_soe(std::size_t N, double dt, double T, std::uint64_t seed, double min_separation = 1e-2);

}  // namespace soebath
