#include "geobandit/geometry.hpp"

#include <algorithm>
#include <cstdio>

namespace geobandit {

std::vector<SpherePoint> fibonacci_sphere(int count, bool hemisphere) {
  if (count <= 0) throw ContractError("fibonacci_sphere: count must be positive");
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  std::vector<SpherePoint> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double z = hemisphere ? 1.0 - static_cast<double>(i) / count
                                : 1.0 - 2.0 * static_cast<double>(i) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double a = golden_angle * i;
    pts.push_back(SpherePoint{{r * std::cos(a), r * std::sin(a), z}});
  }
  return pts;
}

std::vector<TorusPoint> torus_lattice(int n_dims, int per_axis) {
  if (n_dims <= 0 || per_axis <= 0) throw ContractError("torus_lattice: bad shape");
  std::int64_t count = 1;
  for (int i = 0; i < n_dims; ++i) {
    count *= per_axis;
    if (count > (1 << 24)) throw ContractError("torus_lattice: count overflow");
  }
  const double step = kTwoPi / per_axis;
  std::vector<TorusPoint> pts;
  pts.reserve(static_cast<std::size_t>(count));
  Eigen::VectorXi idx = Eigen::VectorXi::Zero(n_dims);
  for (std::int64_t n = 0; n < count; ++n) {
    Eigen::VectorXd phi(n_dims);
    for (int i = 0; i < n_dims; ++i) phi[i] = idx[i] * step;
    pts.push_back(TorusPoint{phi});
    for (int i = n_dims - 1; i >= 0; --i) {  // last axis fastest
      if (++idx[i] < per_axis) break;
      idx[i] = 0;
    }
  }
  return pts;
}

namespace {

// Hamilton product, (w, x, y, z) layout.
Eigen::Vector4d quat_mul(const Eigen::Vector4d& a, const Eigen::Vector4d& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

Eigen::Vector4d quat_conj(const Eigen::Vector4d& a) { return {a[0], -a[1], -a[2], -a[3]}; }

}  // namespace

std::vector<RotationPoint> super_fibonacci_so3(int count) {
  if (count <= 0) throw ContractError("super_fibonacci_so3: count must be positive");
  const double phi = std::sqrt(2.0);
  const double psi = 1.533751168755204288118041;
  std::vector<Eigen::Vector4d> raw;
  raw.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double s = i + 0.5;
    const double t = s / count;
    const double d = kTwoPi * s;
    const double r = std::sqrt(t);
    const double R = std::sqrt(1.0 - t);
    const double alpha = d / phi;
    const double beta = d / psi;
    raw.push_back({r * std::sin(alpha), r * std::cos(alpha), R * std::sin(beta), R * std::cos(beta)});
  }
  const Eigen::Vector4d inv0 = quat_conj(raw[0]);
  std::vector<RotationPoint> pts;
  pts.reserve(count);
  for (const auto& q : raw) pts.push_back(make_rotation_point<double>(quat_mul(inv0, q)));
  return pts;
}

CandidateSet make_candidate_set(Manifold m, std::vector<ManifoldPoint> pts) {
  if (pts.empty()) throw ContractError("candidate set: empty");
  for (const auto& p : pts)
    if (manifold_of(p) != m) throw ContractError("candidate set: manifold mismatch");
  return CandidateSet{m, std::move(pts)};
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_candidates_csv(const CandidateSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  out << "manifold=" << manifold_name(set.manifold);
  if (set.manifold == Manifold::DiscreteTorus && !set.points.empty())
    out << ",levels=" << std::get<DiscreteTorusPoint>(set.points.front()).levels;
  out << "\n";
  for (const auto& p : set.points) {
    std::visit(
        [&out](const auto& pt) {
          using T = std::decay_t<decltype(pt)>;
          if constexpr (std::is_same_v<T, SpherePoint>) {
            out << fmt17(pt.u[0]) << ',' << fmt17(pt.u[1]) << ',' << fmt17(pt.u[2]);
          } else if constexpr (std::is_same_v<T, TorusPoint>) {
            for (Eigen::Index i = 0; i < pt.phi.size(); ++i)
              out << (i ? "," : "") << fmt17(pt.phi[i]);
          } else if constexpr (std::is_same_v<T, RotationPoint>) {
            for (int i = 0; i < 4; ++i) out << (i ? "," : "") << fmt17(pt.q[i]);
          } else {
            for (Eigen::Index i = 0; i < pt.theta.size(); ++i)
              out << (i ? "," : "") << pt.theta[i];
          }
        },
        p);
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

CandidateSet load_candidates_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty candidate file: " + path);
  Manifold m;
  int levels = 0;
  if (header.rfind("manifold=sphere", 0) == 0) m = Manifold::Sphere;
  else if (header.rfind("manifold=torus", 0) == 0) m = Manifold::Torus;
  else if (header.rfind("manifold=rotation", 0) == 0) m = Manifold::Rotation;
  else if (header.rfind("manifold=discrete_torus", 0) == 0) {
    m = Manifold::DiscreteTorus;
    const auto pos = header.find("levels=");
    if (pos == std::string::npos) throw IoError("discrete torus header missing levels");
    levels = std::stoi(header.substr(pos + 7));
  } else {
    throw IoError("unknown manifold header: " + header);
  }
  std::vector<ManifoldPoint> pts;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    switch (m) {
      case Manifold::Sphere: {
        if (vals.size() != 3) throw IoError("sphere row needs 3 columns");
        pts.push_back(SpherePoint{{vals[0], vals[1], vals[2]}});
        break;
      }
      case Manifold::Torus: {
        Eigen::VectorXd phi = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
        pts.push_back(TorusPoint{phi});
        break;
      }
      case Manifold::Rotation: {
        if (vals.size() != 4) throw IoError("rotation row needs 4 columns");
        pts.push_back(RotationPoint{{vals[0], vals[1], vals[2], vals[3]}});
        break;
      }
      case Manifold::DiscreteTorus: {
        Eigen::VectorXi th(vals.size());
        for (std::size_t i = 0; i < vals.size(); ++i) th[static_cast<Eigen::Index>(i)] = static_cast<int>(vals[i]);
        pts.push_back(DiscreteTorusPoint{th, levels});
        break;
      }
    }
  }
  return CandidateSet{m, std::move(pts)};
}

int tangent_dimension(const ManifoldPoint& p) {
  switch (manifold_of(p)) {
    case Manifold::Sphere: return 2;
    case Manifold::Torus: return static_cast<int>(std::get<TorusPoint>(p).phi.size());
    case Manifold::Rotation: return 3;
    case Manifold::DiscreteTorus:
      throw ContractError("tangent_dimension: discrete manifold has no chart");
  }
  return 0;
}

namespace {

// Orthonormal tangent basis at a sphere point.
void sphere_basis(const Eigen::Vector3d& u, Eigen::Vector3d& e1, Eigen::Vector3d& e2) {
  const Eigen::Vector3d ref =
      std::abs(u[2]) < 0.9 ? Eigen::Vector3d::UnitZ() : Eigen::Vector3d::UnitX();
  e1 = u.cross(ref).normalized();
  e2 = u.cross(e1);
}

Eigen::Vector4d quat_exp(const Eigen::Vector3d& v) {
  const double angle = v.norm();
  if (angle < 1e-14) return {1.0, 0.5 * v[0], 0.5 * v[1], 0.5 * v[2]};
  const double s = std::sin(0.5 * angle) / angle;
  return {std::cos(0.5 * angle), s * v[0], s * v[1], s * v[2]};
}

}  // namespace

ManifoldPoint tangent_step(const ManifoldPoint& p, const Eigen::VectorXd& d, double step) {
  switch (manifold_of(p)) {
    case Manifold::Sphere: {
      const auto& sp = std::get<SpherePoint>(p);
      Eigen::Vector3d e1, e2;
      sphere_basis(sp.u, e1, e2);
      const Eigen::Vector3d t = d[0] * e1 + d[1] * e2;
      const double n = t.norm();
      if (n * std::abs(step) < 1e-300) return p;
      const double a = n * step;
      return make_sphere_point<double>(
          Eigen::Vector3d(std::cos(a) * sp.u + std::sin(a) * (t / n)));
    }
    case Manifold::Torus: {
      const auto& tp = std::get<TorusPoint>(p);
      return make_torus_point<double>(Eigen::VectorXd(tp.phi + step * d));
    }
    case Manifold::Rotation: {
      const auto& rp = std::get<RotationPoint>(p);
      Eigen::Vector4d q{rp.q[0], rp.q[1], rp.q[2], rp.q[3]};
      const Eigen::Vector3d v = step * Eigen::Vector3d(d[0], d[1], d[2]);
      return make_rotation_point<double>(Eigen::Vector4d(quat_mul(q, quat_exp(v))));
    }
    case Manifold::DiscreteTorus:
      throw ContractError("tangent_step: discrete manifold");
  }
  throw ContractError("tangent_step: unreachable");
}

ManifoldPoint local_refine(const Objective& objective, const ManifoldPoint& start,
                           int sweeps, const RefineParams& params) {
  if (manifold_of(start) == Manifold::DiscreteTorus)
    throw ContractError("local_refine: continuous manifolds only");
  const int dim = tangent_dimension(start);
  ManifoldPoint x = start;
  double fx = objective(x);
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    // Central differences in the tangent chart at x.
    Eigen::VectorXd g(dim);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < dim; ++i) {
      e[i] = 1.0;
      const double fp = objective(tangent_step(x, e, params.fd_step));
      const double fm = objective(tangent_step(x, e, -params.fd_step));
      g[i] = (fp - fm) / (2.0 * params.fd_step);
      e[i] = 0.0;
    }
    const double gn = g.norm();
    if (!(gn > 0.0) || !std::isfinite(gn)) break;
    const Eigen::VectorXd dir = g / gn;
    double step = params.initial_step;
    bool accepted = false;
    for (int bt = 0; bt <= params.max_backtracks; ++bt) {
      const ManifoldPoint cand = tangent_step(x, dir, step);
      const double fc = objective(cand);
      if (fc >= fx + params.armijo_c * step * gn) {
        x = cand;
        fx = fc;
        accepted = true;
        break;
      }
      step *= params.shrink;
    }
    if (!accepted) break;
  }
  return x;
}

}  // namespace geobandit
