#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "soebath/common.hpp"

namespace soebath {

/// One term c e^{-i z t}.
struct SoeTerm {
  cplx c;
  cplx z;
};

enum class Provenance { quadrature, esprit, analytic };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

struct AchievedError {
  Norm norm = Norm::L1;
  double value = 0.0;
};

/// Delta(t) ~ sum_j c_j exp(-i z_j t) on [0, horizon].
class SoeRepresentation {
 public:
  SoeRepresentation(std::vector<SoeTerm> terms, double horizon, Provenance provenance = Provenance::quadrature);

  const std::vector<SoeTerm>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  double horizon() const { return horizon_; }
  Provenance provenance() const { return provenance_; }

  const std::optional<AchievedError>& achieved_error() const { return achieved_; }
  void set_achieved_error(Norm norm, double value) { achieved_ = AchievedError{norm, value}; }

  /// Set for kernels whose terms come in (c, z) <-> (conj c, -conj z) pairs.
  bool real_kernel() const { return real_kernel_; }
  void set_real_kernel(bool v) { real_kernel_ = v; }

  void set_horizon(double T);

 private:
  std::vector<SoeTerm> terms_;
  double horizon_;
  Provenance provenance_;
  std::optional<AchievedError> achieved_;
  bool real_kernel_ = false;
};

/// sum_j c_j e^{-i z_j t}, summed in descending |c_j| with compensation.
cplx eval(const SoeRepresentation& soe, double t);

/// Grid evaluation. Uniform grids use a per-term recurrence with periodic
/// resynchronisation; other grids fall back to pointwise evaluation.
std::vector<cplx> eval_grid(const SoeRepresentation& soe, std::span<const double> t);

/// Values at t_k = k dt, k = 0..n-1.
std::vector<cplx> eval_uniform(const SoeRepresentation& soe, double dt, std::size_t n);

/// Poles z -> s z + d, weights unchanged, horizon T -> T / s.
SoeRepresentation affine_rescale(const SoeRepresentation& soe, double s, double d);

/// Concatenation; with `consolidate`, poles closer than 1e-14 are merged.
SoeRepresentation merge(const SoeRepresentation& a, const SoeRepresentation& b, bool consolidate = false);

/// Riemann sums over t_k = k dt, k = 0..floor(T/dt).
double l1_error(const SoeRepresentation& soe, const ScalarReference& reference, double T, double dt);
double linf_error(const SoeRepresentation& soe, const ScalarReference& reference, double T, double dt);

/// Same metrics against precomputed reference samples on the grid k dt.
double l1_error(const SoeRepresentation& soe, std::span<const cplx> reference, double dt);
double linf_error(const SoeRepresentation& soe, std::span<const cplx> reference, double dt);

/// Number of grid points floor(T/dt) + 1, robust to T being a multiple of dt.
std::size_t grid_count(double T, double dt);

nlohmann::json to_json(const SoeRepresentation& soe);
SoeRepresentation soe_from_json(const nlohmann::json& j);

void write_json(const SoeRepresentation& soe, const std::string& path);
SoeRepresentation read_json(const std::string& path);
/// Rows t, Re, Im on t_k = k dt up to T.
void write_csv(const SoeRepresentation& soe, double T, double dt, const std::string& path);

}  // namespace soebath
