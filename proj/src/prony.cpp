#include "soebath/prony.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>

#include "soebath/kernels.hpp"

namespace soebath {

namespace {

constexpr std::size_t kTsqrBlock = 4096;
constexpr double kGramRankFloor = 1e-7;

Eigen::MatrixXcd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = cplx(normal(rng), normal(rng));
  return m;
}

Eigen::MatrixXcd thin_q(const Eigen::MatrixXcd& a) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(a.rows(), a.cols());
}

// Pole from a shift-invariance eigenvalue, with Re z in (-pi/dt, pi/dt].
cplx pole_from_ratio(cplx lambda, double dt) {
  const double mag = std::max(std::abs(lambda), 1e-300);
  double arg = std::arg(lambda);
  if (arg <= -pi) arg = pi;
  // z = i log(lambda) / dt
  cplx z = cplx(0.0, 1.0) * cplx(std::log(mag), arg) / dt;
  if (z.real() <= -pi / dt) z.real(pi / dt);
  return z;
}

}  // namespace

SampleSet sample(const ScalarReference& reference, double T, double dt) {
  require(dt > 0.0, "sample: dt must be > 0");
  require(T > 0.0, "sample: T must be > 0");
  SampleSet s;
  s.dt = dt;
  s.T = T;
  const std::size_t n = grid_count(T, dt);
  s.values.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    s.values[k] = reference(static_cast<double>(k) * dt);
    require(std::isfinite(s.values[k].real()) && std::isfinite(s.values[k].imag()), "sample: non-finite reference value");
  }
  return s;
}

SampleSet sample(const SoeRepresentation& soe, double T, double dt) {
  require(dt > 0.0 && T > 0.0, "sample: need dt > 0 and T > 0");
  return SampleSet{eval_uniform(soe, dt, grid_count(T, dt)), dt, T};
}

EspritFitter::EspritFitter(SampleSet samples, std::size_t max_modes, EspritOptions opts)
    : samples_(std::move(samples)), max_modes_(max_modes), opts_(opts) {
  const std::size_t n = samples_.values.size();
  require(samples_.dt > 0.0, "ESPRIT: dt must be > 0");
  require(max_modes_ >= 1, "ESPRIT: need at least one mode");
  require(2 * max_modes_ < n, "ESPRIT: need 2N < sample count");
  rows_ = std::min(n / 2, opts_.max_rows);
  require(max_modes_ < rows_, "ESPRIT: too many modes for the Hankel row count");
  const auto L = static_cast<Eigen::Index>(rows_);
  const auto k = static_cast<Eigen::Index>(std::min(rows_, max_modes_ + opts_.oversample));
  const std::span<const cplx> x(samples_.values);

  double floor = opts_.rank_tol;
  if (n <= opts_.dense_limit) {
    const auto K = static_cast<Eigen::Index>(n - rows_ + 1);
    Eigen::MatrixXcd H(L, K);
    for (Eigen::Index j = 0; j < K; ++j)
      for (Eigen::Index i = 0; i < L; ++i) H(i, j) = x[static_cast<std::size_t>(i + j)];
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(H, Eigen::ComputeThinU);
    U_ = svd.matrixU().leftCols(k);
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) sigma_.push_back(svd.singularValues()(i));
  } else {
    // Top eigenvectors of G = H H^* by subspace iteration.
    const Eigen::MatrixXcd G = kernels::hankel_gram(x, rows_);
    Eigen::MatrixXcd Q = thin_q(G * random_matrix(L, k, opts_.seed));
    for (int it = 0; it < opts_.subspace_iterations; ++it) Q = thin_q(G * Q);
    const Eigen::MatrixXcd small = Q.adjoint() * G * Q;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (small + small.adjoint()));
    const auto& vals = eig.eigenvalues();
    U_.resize(L, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index src = k - 1 - i;  // descending
      U_.col(i) = Q * eig.eigenvectors().col(src);
      sigma_.push_back(std::sqrt(std::max(vals(src), 0.0)));
    }
    floor = std::max(floor, kGramRankFloor);
  }
  const double smax = sigma_.empty() ? 0.0 : sigma_.front();
  rank_ = 0;
  for (double s : sigma_) {
    if (s > floor * smax) ++rank_;
  }
  rank_ = std::min<std::size_t>(rank_, static_cast<std::size_t>(U_.cols()));
}

SoeRepresentation EspritFitter::fit(std::size_t N) const {
  require(N >= 1, "ESPRIT: N must be >= 1");
  require(N <= max_modes_, "ESPRIT: N exceeds the fitter's mode budget");
  if (N > rank_) {
    throw Error("ESPRIT: rank deficiency, N = " + std::to_string(N) + " exceeds numerical rank " +
                std::to_string(rank_));
  }
  const auto L = U_.rows();
  const auto n = static_cast<Eigen::Index>(N);
  const Eigen::MatrixXcd U1 = U_.topLeftCorner(L - 1, n);
  const Eigen::MatrixXcd U2 = U_.bottomLeftCorner(L - 1, n);
  const Eigen::MatrixXcd Phi = U1.colPivHouseholderQr().solve(U2);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(Phi, false);

  clamped_ = 0;
  std::vector<cplx> poles;
  for (Eigen::Index j = 0; j < n; ++j) {
    cplx lambda = eig.eigenvalues()(j);
    const double mag = std::abs(lambda);
    if (mag > 1.0) {
      if (mag > 1.0 + 1e-8) ++clamped_;
      lambda /= mag;
    }
    cplx z = pole_from_ratio(lambda, samples_.dt);
    if (z.imag() > 0.0) z.imag(0.0);
    poles.push_back(z);
  }
  if (clamped_ > 0) {
    std::cerr << "warning: ESPRIT clamped " << clamped_ << " growing mode(s) to the unit circle\n";
  }
  const auto c = fit_weights(samples_, poles);
  std::vector<SoeTerm> terms;
  for (std::size_t j = 0; j < N; ++j) terms.push_back({c[j], poles[j]});
  return SoeRepresentation(std::move(terms), samples_.T, Provenance::esprit);
}

std::vector<cplx> fit_weights(const SampleSet& samples, const std::vector<cplx>& poles) {
  const std::size_t n = samples.values.size();
  const auto N = static_cast<Eigen::Index>(poles.size());
  require(N >= 1, "fit_weights: no poles");
  require(n >= poles.size(), "fit_weights: fewer samples than poles");
  const std::size_t nblocks = (n + kTsqrBlock - 1) / kTsqrBlock;
  std::vector<Eigen::MatrixXcd> R(nblocks);

  // Blockwise QR of [V | x]; each block contributes its R factor.
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    const std::size_t k0 = static_cast<std::size_t>(b) * kTsqrBlock;
    const std::size_t k1 = std::min(n, k0 + kTsqrBlock);
    const auto rows = static_cast<Eigen::Index>(k1 - k0);
    Eigen::MatrixXcd A(rows, N + 1);
    for (Eigen::Index j = 0; j < N; ++j) {
      const cplx mz = cplx(0.0, -1.0) * poles[static_cast<std::size_t>(j)];
      const cplx step = std::exp(mz * samples.dt);
      cplx p;
      for (Eigen::Index i = 0; i < rows; ++i) {
        const std::size_t k = k0 + static_cast<std::size_t>(i);
        p = (i % static_cast<Eigen::Index>(kernels::resync_interval) == 0)
                ? std::exp(mz * (static_cast<double>(k) * samples.dt))
                : p * step;
        A(i, j) = p;
      }
    }
    for (Eigen::Index i = 0; i < rows; ++i) A(i, N) = samples.values[k0 + static_cast<std::size_t>(i)];
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(A);
    const Eigen::Index r = std::min(rows, N + 1);
    R[static_cast<std::size_t>(b)] = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  }

  Eigen::Index total = 0;
  for (const auto& r : R) total += r.rows();
  Eigen::MatrixXcd stacked(total, N + 1);
  Eigen::Index row = 0;
  for (const auto& r : R) {
    stacked.middleRows(row, r.rows()) = r;
    row += r.rows();
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(stacked);
  const Eigen::MatrixXcd Rf = qr.matrixQR().topRows(N + 1).triangularView<Eigen::Upper>();
  const Eigen::MatrixXcd Rv = Rf.topLeftCorner(N, N);
  const Eigen::VectorXcd rhs = Rf.topRightCorner(N, 1);
  const Eigen::VectorXcd c = Rv.completeOrthogonalDecomposition().solve(rhs);
  std::vector<cplx> out(static_cast<std::size_t>(N));
  for (Eigen::Index j = 0; j < N; ++j) out[static_cast<std::size_t>(j)] = c(j);
  return out;
}

SoeRepresentation esprit(const SampleSet& samples, std::size_t N, const EspritOptions& opts) {
  return EspritFitter(samples, N, opts).fit(N);
}

MinimalModes minimal_modes(const SampleSet& samples, double eps, std::size_t n_max, const EspritOptions& opts) {
  require(eps > 0.0, "minimal_modes: eps must be > 0");
  require(n_max >= 1, "minimal_modes: n_max must be >= 1");
  const std::size_t rows = std::min(samples.values.size() / 2, opts.max_rows);
  n_max = std::min({n_max, rows > 0 ? rows - 1 : 0, (samples.values.size() - 1) / 2});
  require(n_max >= 1, "minimal_modes: too few samples");
  EspritFitter fitter(samples, n_max, opts);

  std::optional<MinimalModes> best;
  std::vector<double> errors;
  const std::size_t top = std::min(n_max, fitter.numerical_rank());
  for (std::size_t N = 1; N <= top; ++N) {
    SoeRepresentation soe = fitter.fit(N);
    const double err = l1_error(soe, samples.values, samples.dt);
    soe.set_achieved_error(Norm::L1, err);
    errors.push_back(err);
    if (!best || err < best->error) best = MinimalModes{N, soe, err, false, {}};
    if (err <= eps) {
      best = MinimalModes{N, soe, err, true, {}};
      break;
    }
  }
  require(best.has_value(), "minimal_modes: samples have numerical rank 0");
  best->errors = std::move(errors);
  return *best;
}

MinimalModes minimal_modes(const ScalarReference& reference, double T, double eps, double dt, std::size_t n_max,
                           const EspritOptions& opts) {
  return minimal_modes(sample(reference, T, dt), eps, n_max, opts);
}

SoeRepresentation compress(const SoeRepresentation& soe, double eps, double T, double dt) {
  require(eps > 0.0, "compress: eps must be > 0");
  if (soe.size() <= 1) return soe;
  double budget = eps;
  if (soe.achieved_error() && soe.achieved_error()->norm == Norm::L1) budget -= soe.achieved_error()->value;
  require(budget > 0.0, "compress: input error already exceeds eps");
  const auto samples = sample(soe, T, dt);
  const std::size_t n_max = std::min<std::size_t>(soe.size() - 1, 60);
  const auto mm = minimal_modes(samples, budget, n_max);
  if (!mm.converged || mm.N >= soe.size()) return soe;
  SoeRepresentation out = mm.soe;
  const double prior = soe.achieved_error() ? soe.achieved_error()->value : 0.0;
  out.set_achieved_error(Norm::L1, prior + mm.error);
  out.set_real_kernel(false);
  return out;
}

SoeRepresentation synthetic_soe(std::size_t N, double dt, double T, std::uint64_t seed, double min_separation) {
  require(N >= 1 && dt > 0.0 && T > 0.0, "synthetic_soe: need N >= 1, dt > 0, T > 0");
  std::mt19937_64 rng(seed);
  const double re_max = 0.9 / dt;
  std::uniform_real_distribution<double> re(-re_max, re_max), im(-1.0, -0.01), mag(0.5, 2.0), phase(-pi, pi);
  std::vector<SoeTerm> terms;
  for (int attempt = 0; terms.size() < N; ++attempt) {
    require(attempt < 100000, "synthetic_soe: separation too strict for N");
    const cplx z(re(rng), im(rng));
    const bool separated = std::all_of(terms.begin(), terms.end(), [&](const SoeTerm& t) {
      return dt * std::abs(t.z - z) >= min_separation;
    });
    if (separated) terms.push_back({std::polar(mag(rng), phase(rng)), z});
  }
  return SoeRepresentation(std::move(terms), T, Provenance::analytic);
}

}  // namespace soebath
