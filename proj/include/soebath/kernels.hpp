#pragma once

#include <span>

#include <Eigen/Dense>

#include "soebath/common.hpp"
#include "soebath/soe.hpp"

// Data-parallel inner loops. Each kernel has a serial reference path and an
// OpenMP path that produce bitwise identical results.
namespace soebath::kernels {

enum class Exec { serial, parallel };

/// Steps between exact re-evaluations of e^{-i z t} in recurrences.
inline constexpr std::size_t resync_interval = 1024;

/// out[k] = sum_j c_j exp(-i z_j k dt) for k < out.size().
void soe_uniform(std::span<const SoeTerm> terms, double dt, std::span<cplx> out, Exec exec = Exec::parallel);

/// sum_k |a_k - b_k| and max_k |a_k - b_k|.
double abs_diff_sum(std::span<const cplx> a, std::span<const cplx> b, Exec exec = Exec::parallel);
double abs_diff_max(std::span<const cplx> a, std::span<const cplx> b, Exec exec = Exec::parallel);

/// Gram matrix G = H H^* of the L x (n - L + 1) Hankel matrix H[i][j] = x[i + j].
Eigen::MatrixXcd hankel_gram(std::span<const cplx> x, std::size_t L, Exec exec = Exec::parallel);

}  // namespace soebath::kernels
