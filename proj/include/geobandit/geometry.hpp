#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "geobandit/common.hpp"

namespace geobandit {

enum class Manifold { Sphere, Torus, Rotation, DiscreteTorus };

inline const char* manifold_name(Manifold m) {
  switch (m) {
    case Manifold::Sphere: return "sphere";
    case Manifold::Torus: return "torus";
    case Manifold::Rotation: return "rotation";
    case Manifold::DiscreteTorus: return "discrete_torus";
  }
  return "?";
}

// Wrap an angle into [0, 2pi).
template <typename S>
S wrap_angle(S x) {
  const S tp = static_cast<S>(kTwoPi);
  S w = x - tp * std::floor(x / tp);
  if (w >= tp) w -= tp;  // guards the x = -eps rounding case
  if (w < S(0)) w = S(0);
  return w;
}

// ---------------------------------------------------------------------------
// Point types.  Constructors canonicalize: sphere directions are unit
// vectors, torus angles live in [0, 2pi), quaternions are unit with
// nonnegative scalar part (double cover collapsed), discrete levels live in
// [0, B).

template <typename S>
struct SpherePointT {
  Eigen::Matrix<S, 3, 1> u;
};

template <typename S>
struct TorusPointT {
  Eigen::Matrix<S, Eigen::Dynamic, 1> phi;
};

template <typename S>
struct RotationPointT {
  Eigen::Matrix<S, 4, 1> q;  // (w, x, y, z)
};

struct DiscreteTorusPoint {
  Eigen::VectorXi theta;
  int levels = 0;  // B
};

using SpherePoint = SpherePointT<double>;
using TorusPoint = TorusPointT<double>;
using RotationPoint = RotationPointT<double>;

template <typename S>
using ManifoldPointT =
    std::variant<SpherePointT<S>, TorusPointT<S>, RotationPointT<S>, DiscreteTorusPoint>;
using ManifoldPoint = ManifoldPointT<double>;

template <typename S>
SpherePointT<S> make_sphere_point(const Eigen::Matrix<S, 3, 1>& v) {
  const S n = v.norm();
  if (!(n > S(1e-12))) throw ContractError("sphere point: zero direction");
  return SpherePointT<S>{v / n};
}

template <typename S>
TorusPointT<S> make_torus_point(const Eigen::Matrix<S, Eigen::Dynamic, 1>& phi) {
  if (phi.size() == 0) throw ContractError("torus point: empty angle vector");
  TorusPointT<S> p{phi};
  for (Eigen::Index i = 0; i < p.phi.size(); ++i) p.phi[i] = wrap_angle(p.phi[i]);
  return p;
}

template <typename S>
RotationPointT<S> make_rotation_point(const Eigen::Matrix<S, 4, 1>& q) {
  const S n = q.norm();
  if (!(n > S(1e-12))) throw ContractError("rotation point: zero quaternion");
  Eigen::Matrix<S, 4, 1> v = q / n;
  // q and -q name one rotation; keep the representative with w >= 0, breaking
  // the w == 0 boundary lexicographically.
  bool flip = v[0] < S(0);
  if (v[0] == S(0)) {
    if (v[1] != S(0)) flip = v[1] < S(0);
    else if (v[2] != S(0)) flip = v[2] < S(0);
    else flip = v[3] < S(0);
  }
  if (flip) v = -v;
  return RotationPointT<S>{v};
}

inline DiscreteTorusPoint make_discrete_torus_point(const Eigen::VectorXi& theta, int levels) {
  if (levels < 2) throw SpecError("discrete torus: levels must be >= 2");
  if (theta.size() == 0) throw ContractError("discrete torus point: empty");
  for (Eigen::Index i = 0; i < theta.size(); ++i)
    if (theta[i] < 0 || theta[i] >= levels)
      throw ContractError("discrete torus point: level out of range");
  return DiscreteTorusPoint{theta, levels};
}

template <typename S>
Manifold manifold_of(const ManifoldPointT<S>& p) {
  struct V {
    Manifold operator()(const SpherePointT<S>&) const { return Manifold::Sphere; }
    Manifold operator()(const TorusPointT<S>&) const { return Manifold::Torus; }
    Manifold operator()(const RotationPointT<S>&) const { return Manifold::Rotation; }
    Manifold operator()(const DiscreteTorusPoint&) const { return Manifold::DiscreteTorus; }
  };
  return std::visit(V{}, p);
}

// ---------------------------------------------------------------------------
// Geodesic distances.

template <typename S>
S geodesic_distance(const SpherePointT<S>& a, const SpherePointT<S>& b) {
  S d = a.u.dot(b.u);
  d = std::min(S(1), std::max(S(-1), d));
  return std::acos(d);
}

template <typename S>
S geodesic_distance(const TorusPointT<S>& a, const TorusPointT<S>& b) {
  if (a.phi.size() != b.phi.size()) throw ContractError("torus distance: dimension mismatch");
  S acc = S(0);
  for (Eigen::Index i = 0; i < a.phi.size(); ++i) {
    S d = std::abs(a.phi[i] - b.phi[i]);
    d = std::min(d, static_cast<S>(kTwoPi) - d);
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Rotation angle of a^T b, computed through the quaternion inner product.
template <typename S>
S geodesic_distance(const RotationPointT<S>& a, const RotationPointT<S>& b) {
  S d = std::abs(a.q.dot(b.q));
  d = std::min(S(1), d);
  return S(2) * std::acos(d);
}

inline double geodesic_distance(const DiscreteTorusPoint& a, const DiscreteTorusPoint& b) {
  if (a.theta.size() != b.theta.size() || a.levels != b.levels)
    throw ContractError("discrete torus distance: shape mismatch");
  const double step = kTwoPi / a.levels;
  double acc = 0;
  for (Eigen::Index i = 0; i < a.theta.size(); ++i) {
    int d = std::abs(a.theta[i] - b.theta[i]);
    d = std::min(d, a.levels - d);
    const double c = d * step;
    acc += c * c;
  }
  return std::sqrt(acc);
}

template <typename S>
S geodesic_distance(const ManifoldPointT<S>& a, const ManifoldPointT<S>& b) {
  if (a.index() != b.index()) throw ContractError("geodesic_distance: manifold mismatch");
  return std::visit(
      [&b](const auto& pa) -> S {
        using T = std::decay_t<decltype(pa)>;
        return static_cast<S>(geodesic_distance(pa, std::get<T>(b)));
      },
      a);
}

inline bool point_equal(const ManifoldPoint& a, const ManifoldPoint& b) {
  if (a.index() != b.index()) return false;
  return geodesic_distance(a, b) == 0.0;
}

// ---------------------------------------------------------------------------
// Candidate sets.

struct CandidateSet {
  Manifold manifold = Manifold::Sphere;
  std::vector<ManifoldPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// Fibonacci-sphere lattice: z uniformly spaced with the spiral seeded at the
// north pole (z_i = 1 - 2i/n, or 1 - i/n on the upper hemisphere), azimuth
// advancing by the golden angle pi(3 - sqrt 5).
std::vector<SpherePoint> fibonacci_sphere(int count, bool hemisphere);

// Uniform lattice on T^n with spacing 2pi/per_axis, last axis fastest.
std::vector<TorusPoint> torus_lattice(int n_dims, int per_axis);

// Super-Fibonacci spiral on SO(3) (double spiral over a torus decomposition
// of S^3; irrational steps phi = sqrt 2 and psi = 1.5337511687552043, the
// positive root of psi^4 = psi + 4).  The raw spiral is left-translated so
// element 0 is the identity; translation preserves pairwise distances and
// Haar uniformity.
std::vector<RotationPoint> super_fibonacci_so3(int count);

CandidateSet make_candidate_set(Manifold m, std::vector<ManifoldPoint> pts);

// Flat CSV with the manifold tag in the header; numbers carry 17 significant
// digits so a round-trip is bitwise.
void save_candidates_csv(const CandidateSet& set, const std::string& path);
CandidateSet load_candidates_csv(const std::string& path);

// ---------------------------------------------------------------------------
// Local refinement: Riemannian gradient ascent in the tangent chart with
// central finite differences and Armijo backtracking.  Continuous manifolds
// only; the discrete analog is per-coordinate ascent in the agent layer.

struct RefineParams {
  double fd_step = 1e-5;       // tangent-chart finite-difference step (radians)
  double initial_step = 0.1;   // initial Armijo step (radians)
  double shrink = 0.5;
  double armijo_c = 1e-4;
  int max_backtracks = 8;
};

using Objective = std::function<double(const ManifoldPoint&)>;

// Returns a point whose objective value is >= objective(start).
ManifoldPoint local_refine(const Objective& objective, const ManifoldPoint& start,
                           int sweeps, const RefineParams& params = {});

// Tangent dimension of a continuous manifold point (2, n, or 3).
int tangent_dimension(const ManifoldPoint& p);

// Exponential-map step: move from p along the tangent direction d (chart
// coordinates) scaled by `step` radians.
ManifoldPoint tangent_step(const ManifoldPoint& p, const Eigen::VectorXd& d, double step);

}  // namespace geobandit
