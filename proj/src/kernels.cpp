#include "soebath/kernels.hpp"

#include <fftw3.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

namespace soebath::kernels {

namespace {

constexpr std::size_t kBlock = resync_interval;
constexpr std::size_t kGramSync = 256;

// Accumulates terms into out[k0, k1); k0 must be a multiple of kBlock so the
// resync points coincide with the serial path.
void soe_block(std::span<const SoeTerm> terms, double dt, cplx* out, std::size_t k0, std::size_t k1) {
  for (const auto& term : terms) {
    const cplx step = std::exp(cplx(0.0, -1.0) * term.z * dt);
    cplx p;
    for (std::size_t k = k0; k < k1; ++k) {
      if (k % kBlock == 0) {
        p = term.c * std::exp(cplx(0.0, -1.0) * term.z * (static_cast<double>(k) * dt));
      } else {
        p *= step;
      }
      out[k - k0] += p;
    }
  }
}

struct FftwDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

FftwBuffer fftw_buffer(std::size_t n) {
  return FftwBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Row i of the upper triangle, G[i][l] for l in [i, L), by FFT correlation.
class GramRowSolver {
 public:
  GramRowSolver(std::span<const cplx> x, std::size_t L)
      : x_(x), L_(L), K_(x.size() - L + 1), P_(next_pow2(x.size())), a_(fftw_buffer(P_)), b_(fftw_buffer(P_)) {
    fwd_a_ = fftw_plan_dft_1d(static_cast<int>(P_), a_.get(), a_.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_a_ = fftw_plan_dft_1d(static_cast<int>(P_), a_.get(), a_.get(), FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_plan fwd_b = fftw_plan_dft_1d(static_cast<int>(P_), b_.get(), b_.get(), FFTW_FORWARD, FFTW_ESTIMATE);
    std::memset(b_.get(), 0, sizeof(fftw_complex) * P_);
    for (std::size_t k = 0; k < x.size(); ++k) {
      b_[k][0] = x[k].real();
      b_[k][1] = x[k].imag();
    }
    fftw_execute(fwd_b);
    fftw_destroy_plan(fwd_b);
  }
  ~GramRowSolver() {
    fftw_destroy_plan(fwd_a_);
    fftw_destroy_plan(bwd_a_);
  }
  GramRowSolver(const GramRowSolver&) = delete;
  GramRowSolver& operator=(const GramRowSolver&) = delete;

  // sum_j x[i+j] conj(x[l+j]) = conj( IFFT(conj(A_i) B)[l] )
  void row(std::size_t i, Eigen::MatrixXcd& G) {
    std::memset(a_.get(), 0, sizeof(fftw_complex) * P_);
    for (std::size_t j = 0; j < K_; ++j) {
      a_[j][0] = x_[i + j].real();
      a_[j][1] = x_[i + j].imag();
    }
    fftw_execute(fwd_a_);
    for (std::size_t k = 0; k < P_; ++k) {
      const cplx a(a_[k][0], -a_[k][1]);
      const cplx b(b_[k][0], b_[k][1]);
      const cplx p = a * b;
      a_[k][0] = p.real();
      a_[k][1] = p.imag();
    }
    fftw_execute(bwd_a_);
    const double scale = 1.0 / static_cast<double>(P_);
    for (std::size_t l = i; l < L_; ++l) {
      G(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l)) = cplx(a_[l][0], -a_[l][1]) * scale;
    }
  }

 private:
  std::span<const cplx> x_;
  std::size_t L_, K_, P_;
  FftwBuffer a_, b_;
  fftw_plan fwd_a_{};
  fftw_plan bwd_a_{};
};

}  // namespace

void soe_uniform(std::span<const SoeTerm> terms, double dt, std::span<cplx> out, Exec exec) {
  std::fill(out.begin(), out.end(), cplx(0.0, 0.0));
  const std::size_t n = out.size();
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  if (exec == Exec::serial) {
    for (std::size_t b = 0; b < nblocks; ++b) {
      const std::size_t k0 = b * kBlock;
      soe_block(terms, dt, out.data() + k0, k0, std::min(n, k0 + kBlock));
    }
    return;
  }
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
    const std::size_t k0 = static_cast<std::size_t>(b) * kBlock;
    soe_block(terms, dt, out.data() + k0, k0, std::min(n, k0 + kBlock));
  }
}

double abs_diff_sum(std::span<const cplx> a, std::span<const cplx> b, Exec exec) {
  require(a.size() == b.size(), "abs_diff_sum: size mismatch");
  const std::size_t n = a.size();
  const std::size_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
  auto block = [&](std::size_t blk) {
    double s = 0.0;
    const std::size_t k1 = std::min(n, (blk + 1) * kBlock);
    for (std::size_t k = blk * kBlock; k < k1; ++k) s += std::abs(a[k] - b[k]);
    partial[blk] = s;
  };
  if (exec == Exec::serial) {
    for (std::size_t blk = 0; blk < nblocks; ++blk) block(blk);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t blk = 0; blk < static_cast<std::ptrdiff_t>(nblocks); ++blk) block(static_cast<std::size_t>(blk));
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

double abs_diff_max(std::span<const cplx> a, std::span<const cplx> b, Exec exec) {
  require(a.size() == b.size(), "abs_diff_max: size mismatch");
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  double m = 0.0;
  if (exec == Exec::serial) {
    for (std::ptrdiff_t k = 0; k < n; ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
  }
#pragma omp parallel for reduction(max : m) schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

Eigen::MatrixXcd hankel_gram(std::span<const cplx> x, std::size_t L, Exec exec) {
  const std::size_t n = x.size();
  require(L >= 1 && L <= n, "hankel_gram: need 1 <= L <= n");
  const std::size_t K = n - L + 1;
  Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(L));

  {
    GramRowSolver rows(x, L);
    for (std::size_t i = 0; i < L; i += kGramSync) rows.row(i, G);
  }

  // Along each diagonal: G[i][l] = G[i-1][l-1] + x[i-1+K] conj(x[l-1+K]) - x[i-1] conj(x[l-1]).
  auto diagonal = [&](std::size_t d) {
    for (std::size_t i = 1; i + d < L; ++i) {
      if (i % kGramSync == 0) continue;
      const std::size_t l = i + d;
      const auto ii = static_cast<Eigen::Index>(i);
      const auto ll = static_cast<Eigen::Index>(l);
      G(ii, ll) = G(ii - 1, ll - 1) + x[i - 1 + K] * std::conj(x[l - 1 + K]) - x[i - 1] * std::conj(x[l - 1]);
    }
  };
  if (exec == Exec::serial) {
    for (std::size_t d = 0; d < L; ++d) diagonal(d);
  } else {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t d = 0; d < static_cast<std::ptrdiff_t>(L); ++d) diagonal(static_cast<std::size_t>(d));
  }
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    G(i, i) = cplx(G(i, i).real(), 0.0);
    for (Eigen::Index l = i + 1; l < G.cols(); ++l) G(l, i) = std::conj(G(i, l));
  }
  return G;
}

}  // namespace soebath::kernels
