#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "geobandit/geometry.hpp"

namespace geobandit {

enum class KernelFamily {
  SphereSpectral,
  TorusSpectral,
  So3Character,
  CircleProduct,
  EuclideanMatern,
  EuclideanSe,
};

const char* kernel_family_name(KernelFamily f);
KernelFamily kernel_family_from_name(const std::string& name);

struct KernelSpec {
  KernelFamily family = KernelFamily::EuclideanMatern;
  double nu = 2.5;
  double lengthscale = 1.0;
  double sigma_f2 = 1.0;
  // Series length: sphere l_max (default 30), torus m_max per axis (default
  // 10), rotation L_tr (default 16).  0 selects the family default.
  int truncation = 0;
};

void validate(const KernelSpec& spec);

// ---------------------------------------------------------------------------
// Discrete-circle kernel table: heat-equation style filter on the cycle graph
// Z_B with eigenvalues lambda_k = 4 sin^2(pi k / B), S(k) = (2 nu / l^2 +
// lambda_k)^-(nu + 1/2), inverse DFT, normalized so values[0] = 1.

struct CircleKernelTable {
  int levels = 0;  // B
  double nu = 0;
  double lengthscale = 0;
  Eigen::VectorXd values;

  double at(int delta) const {
    int d = delta % levels;
    if (d < 0) d += levels;
    return values[d];
  }
};

// Core series in any scalar type; the long double instantiation doubles as
// the extended-precision oracle in tests.
template <typename S>
std::vector<S> circle_table_values(int levels, S nu, S lengthscale) {
  if (levels < 2) throw SpecError("circle table: levels must be >= 2");
  if (!(nu > S(0)) || !(lengthscale > S(0)))
    throw SpecError("circle table: nu and lengthscale must be positive");
  const S a = S(2) * nu / (lengthscale * lengthscale);
  std::vector<S> filt(levels);
  for (int k = 0; k < levels; ++k) {
    const S s = std::sin(static_cast<S>(kPi) * k / levels);
    filt[k] = std::pow(a + S(4) * s * s, -(nu + S(0.5)));
  }
  // evaluate the inverse transform on 0 <= d <= B/2 and mirror the rest so
  // the d <-> B - d symmetry holds bitwise
  std::vector<S> vals(levels);
  for (int d = 0; d <= levels / 2; ++d) {
    S acc = S(0);
    for (int k = 0; k < levels; ++k)
      acc += filt[k] * std::cos(static_cast<S>(kTwoPi) * k * d / levels);
    vals[d] = acc / levels;
    if (d > 0 && d < levels - d) vals[levels - d] = vals[d];
  }
  const S v0 = vals[0];
  for (int d = 0; d < levels; ++d) vals[d] /= v0;
  vals[0] = S(1);
  return vals;
}

CircleKernelTable build_circle_table(int levels, double nu, double lengthscale);

void save_circle_table_csv(const CircleKernelTable& table, const std::string& path);
CircleKernelTable load_circle_table_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Kernel: immutable evaluator with per-family spectral caches.  Intrinsic
// families require matching manifolds; the Euclidean families accept any
// point through its ambient embedding (Cartesian coordinates, raw angles,
// flattened rotation matrix, or unwrapped phases 2 pi theta / B).

class Kernel {
 public:
  explicit Kernel(const KernelSpec& spec);
  Kernel(const KernelSpec& spec, CircleKernelTable table);

  double operator()(const ManifoldPoint& a, const ManifoldPoint& b) const;
  double variance() const { return spec_.sigma_f2; }
  const KernelSpec& spec() const { return spec_; }
  const CircleKernelTable& table() const;

  // Stationary profiles used by the fast paths in tests and agents.
  double sphere_profile(double cos_angle) const;   // normalized, in [?,1]
  double so3_profile(double omega) const;
  double torus_profile(const Eigen::VectorXd& delta) const;

  static Eigen::VectorXd embed(const ManifoldPoint& p);

 private:
  void build_sphere_cache();
  void build_so3_cache();
  void build_torus_cache(int dims) const;

  KernelSpec spec_;
  CircleKernelTable table_;

  // sphere: c_l = (2l+1) phi_nu(l(l+1)); denom = sum c_l
  std::vector<double> sphere_coeff_;
  double sphere_denom_ = 0;

  // rotation: s_l = (2 nu / l_g^2 + l(l+1))^-(nu+3/2); denom = sum (2l+1)^2 s_l
  std::vector<double> so3_coeff_;
  double so3_denom_ = 0;

  // torus: octant table over 0 <= m_i <= m_max with parity weights folded in
  struct TorusEntry {
    std::uint8_t m[3];
    double coeff;
  };
  mutable std::vector<TorusEntry> torus_entries_;
  mutable double torus_denom_ = 0;
  mutable int torus_dims_ = 0;
};

Eigen::MatrixXd gram_matrix(const Kernel& kernel, const std::vector<ManifoldPoint>& pts);

// Matern-5/2 and squared-exponential profiles on a plain distance.
inline double matern52(double r, double lengthscale, double sigma_f2) {
  const double s = std::sqrt(5.0) * r / lengthscale;
  return sigma_f2 * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

inline double squared_exponential(double r, double lengthscale, double sigma_f2) {
  const double z = r / lengthscale;
  return sigma_f2 * std::exp(-0.5 * z * z);
}

}  // namespace geobandit
