#include "geobandit/kernels.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace geobandit {

const char* kernel_family_name(KernelFamily f) {
  switch (f) {
    case KernelFamily::SphereSpectral: return "sphere-spectral";
    case KernelFamily::TorusSpectral: return "torus-spectral";
    case KernelFamily::So3Character: return "so3-character";
    case KernelFamily::CircleProduct: return "circle-product";
    case KernelFamily::EuclideanMatern: return "euclidean-matern";
    case KernelFamily::EuclideanSe: return "euclidean-se";
  }
  return "?";
}

KernelFamily kernel_family_from_name(const std::string& name) {
  if (name == "sphere-spectral") return KernelFamily::SphereSpectral;
  if (name == "torus-spectral") return KernelFamily::TorusSpectral;
  if (name == "so3-character") return KernelFamily::So3Character;
  if (name == "circle-product") return KernelFamily::CircleProduct;
  if (name == "euclidean-matern") return KernelFamily::EuclideanMatern;
  if (name == "euclidean-se") return KernelFamily::EuclideanSe;
  throw ConfigError("unknown kernel family: " + name);
}

void validate(const KernelSpec& spec) {
  if (!(spec.nu > 0)) throw SpecError("kernel: nu must be positive");
  if (!(spec.lengthscale > 0)) throw SpecError("kernel: lengthscale must be positive");
  if (!(spec.sigma_f2 > 0)) throw SpecError("kernel: sigma_f2 must be positive");
  if (spec.truncation < 0) throw SpecError("kernel: truncation must be nonnegative");
  if (spec.family == KernelFamily::EuclideanMatern && spec.nu != 2.5)
    throw SpecError("euclidean-matern: only nu = 5/2 is provided");
}

CircleKernelTable build_circle_table(int levels, double nu, double lengthscale) {
  const std::vector<double> vals = circle_table_values<double>(levels, nu, lengthscale);
  CircleKernelTable t;
  t.levels = levels;
  t.nu = nu;
  t.lengthscale = lengthscale;
  t.values = Eigen::Map<const Eigen::VectorXd>(vals.data(), levels);
  return t;
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_circle_table_csv(const CircleKernelTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  out << "# nu=" << fmt17(table.nu) << " lengthscale=" << fmt17(table.lengthscale)
      << "\n";
  out << "level_delta,value\n";
  for (int d = 0; d < table.levels; ++d) out << d << ',' << fmt17(table.values[d]) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

CircleKernelTable load_circle_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  std::string line;
  CircleKernelTable t;
  if (!std::getline(in, line)) throw IoError("empty circle table: " + path);
  if (line.rfind("# nu=", 0) == 0) {
    std::stringstream ss(line.substr(2));
    std::string kv;
    while (ss >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = kv.substr(0, eq);
      const double val = std::stod(kv.substr(eq + 1));
      if (key == "nu") t.nu = val;
      if (key == "lengthscale") t.lengthscale = val;
    }
    if (!std::getline(in, line)) throw IoError("truncated circle table: " + path);
  }
  std::vector<double> vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("bad circle table row: " + line);
    vals.push_back(std::stod(line.substr(comma + 1)));
  }
  t.levels = static_cast<int>(vals.size());
  t.values = Eigen::Map<const Eigen::VectorXd>(vals.data(), t.levels);
  if (t.levels < 2) throw IoError("circle table too short");
  return t;
}

Kernel::Kernel(const KernelSpec& spec) : spec_(spec) {
  validate(spec_);
  if (spec_.family == KernelFamily::CircleProduct)
    throw SpecError("circle-product kernel requires a table");
  switch (spec_.family) {
    case KernelFamily::SphereSpectral:
      if (spec_.truncation == 0) spec_.truncation = 30;
      build_sphere_cache();
      break;
    case KernelFamily::TorusSpectral:
      if (spec_.truncation == 0) spec_.truncation = 10;
      if (spec_.truncation > 63)
        throw SpecError("torus-spectral: m_max > 63 unsupported");
      break;  // octant table built when the dimension is first seen
    case KernelFamily::So3Character:
      if (spec_.truncation == 0) spec_.truncation = 16;
      build_so3_cache();
      break;
    default:
      break;
  }
}

Kernel::Kernel(const KernelSpec& spec, CircleKernelTable table)
    : spec_(spec), table_(std::move(table)) {
  validate(spec_);
  if (spec_.family != KernelFamily::CircleProduct)
    throw SpecError("table constructor is for the circle-product family");
  if (table_.levels < 2) throw SpecError("circle table: levels must be >= 2");
}

const CircleKernelTable& Kernel::table() const {
  if (spec_.family != KernelFamily::CircleProduct)
    throw ContractError("table(): not a circle-product kernel");
  return table_;
}

void Kernel::build_sphere_cache() {
  // phi_nu(lambda) = (2 nu / kappa^2 + lambda)^-(nu + d/2), d = 2,
  // lambda_l = l(l+1), multiplicity 2l+1.
  const double a = 2.0 * spec_.nu / (spec_.lengthscale * spec_.lengthscale);
  const int lmax = spec_.truncation;
  sphere_coeff_.resize(lmax + 1);
  sphere_denom_ = 0;
  for (int l = 0; l <= lmax; ++l) {
    const double lam = static_cast<double>(l) * (l + 1);
    sphere_coeff_[l] = (2.0 * l + 1.0) * std::pow(a + lam, -(spec_.nu + 1.0));
    sphere_denom_ += sphere_coeff_[l];
  }
}

double Kernel::sphere_profile(double cos_angle) const {
  // Legendre recurrence; P_l(1) evaluates to exactly 1, which makes the
  // normalized diagonal exactly sigma_f2.
  double pm2 = 1.0, pm1 = cos_angle;
  double acc = sphere_coeff_[0] * pm2;
  const int lmax = spec_.truncation;
  if (lmax >= 1) acc += sphere_coeff_[1] * pm1;
  for (int l = 2; l <= lmax; ++l) {
    const double p = ((2.0 * l - 1.0) * cos_angle * pm1 - (l - 1.0) * pm2) / l;
    acc += sphere_coeff_[l] * p;
    pm2 = pm1;
    pm1 = p;
  }
  return acc / sphere_denom_;
}

void Kernel::build_so3_cache() {
  // S(l) = (2 nu / l_g^2 + l(l+1))^-(nu + 3/2); denominator sums the
  // characters at omega = 0 where chi_l = 2l+1.
  const double a = 2.0 * spec_.nu / (spec_.lengthscale * spec_.lengthscale);
  const int L = spec_.truncation;
  so3_coeff_.resize(L + 1);
  for (int l = 0; l <= L; ++l) {
    const double lam = static_cast<double>(l) * (l + 1);
    so3_coeff_[l] = std::pow(a + lam, -(spec_.nu + 1.5));
  }
  so3_denom_ = 0;
  for (int l = 0; l <= L; ++l) {
    const double m = 2.0 * l + 1.0;
    so3_denom_ += m * m * so3_coeff_[l];
  }
}

double Kernel::so3_profile(double omega) const {
  const int L = spec_.truncation;
  double acc = 0;
  if (std::abs(omega) < 1e-6) {
    // chi_l(omega) = (2l+1)(1 - ((2l+1)^2 - 1) omega^2 / 24 + O(omega^4))
    const double w2 = omega * omega;
    for (int l = 0; l <= L; ++l) {
      const double m = 2.0 * l + 1.0;
      const double chi = m * (1.0 - (m * m - 1.0) * w2 / 24.0);
      acc += m * chi * so3_coeff_[l];
    }
  } else {
    const double half = 0.5 * omega;
    const double sh = std::sin(half);
    for (int l = 0; l <= L; ++l) {
      const double m = 2.0 * l + 1.0;
      const double chi = std::sin(m * half) / sh;
      acc += m * chi * so3_coeff_[l];
    }
  }
  return acc / so3_denom_;
}

void Kernel::build_torus_cache(int dims) const {
  // Octant reduction of the box sum over Z^n: folding the +/- signs of each
  // coordinate turns e^{i m.delta} into prod_a eps_{m_a} cos(m_a delta_a)
  // with eps_0 = 1, eps_m = 2.  Exact reorganization of the same sum.
  if (dims < 1 || dims > 3) throw SpecError("torus-spectral: 1 <= n <= 3 supported");
  if (spec_.truncation > 63) throw SpecError("torus-spectral: m_max > 63 unsupported");
  const double a = 2.0 * spec_.nu / (spec_.lengthscale * spec_.lengthscale);
  const double expo = -(spec_.nu + 0.5 * dims);
  const int mmax = spec_.truncation;
  torus_entries_.clear();
  torus_denom_ = 0;
  const int lim1 = mmax, lim2 = dims >= 2 ? mmax : 0, lim3 = dims >= 3 ? mmax : 0;
  for (int i = 0; i <= lim1; ++i)
    for (int j = 0; j <= lim2; ++j)
      for (int k = 0; k <= lim3; ++k) {
        double w = std::pow(a + double(i) * i + double(j) * j + double(k) * k, expo);
        if (i > 0) w *= 2.0;
        if (j > 0) w *= 2.0;
        if (k > 0) w *= 2.0;
        torus_entries_.push_back({{static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j),
                                   static_cast<std::uint8_t>(k)},
                                  w});
        torus_denom_ += w;
      }
  torus_dims_ = dims;
}

double Kernel::torus_profile(const Eigen::VectorXd& delta) const {
  const int dims = static_cast<int>(delta.size());
  if (torus_dims_ != dims) build_torus_cache(dims);
  const int mmax = spec_.truncation;
  // cos(m x) by recurrence per axis; exact ones at delta = 0.
  double table[3][64];
  for (int axis = 0; axis < dims; ++axis) {
    double* c = table[axis];
    c[0] = 1.0;
    if (mmax >= 1) c[1] = std::cos(delta[axis]);
    const double twoc = 2.0 * (mmax >= 1 ? c[1] : 0.0);
    for (int m = 2; m <= mmax; ++m) c[m] = twoc * c[m - 1] - c[m - 2];
  }
  for (int axis = dims; axis < 3; ++axis) table[axis][0] = 1.0;
  double acc = 0;
  for (const auto& e : torus_entries_)
    acc += e.coeff * table[0][e.m[0]] * table[1][e.m[1]] * table[2][e.m[2]];
  return acc / torus_denom_;
}

Eigen::VectorXd Kernel::embed(const ManifoldPoint& p) {
  switch (manifold_of(p)) {
    case Manifold::Sphere:
      return std::get<SpherePoint>(p).u;
    case Manifold::Torus:
      return std::get<TorusPoint>(p).phi;
    case Manifold::Rotation: {
      const auto& q = std::get<RotationPoint>(p).q;
      const double w = q[0], x = q[1], y = q[2], z = q[3];
      Eigen::VectorXd r(9);
      r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
          2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
      return r;
    }
    case Manifold::DiscreteTorus: {
      const auto& dp = std::get<DiscreteTorusPoint>(p);
      Eigen::VectorXd r(dp.theta.size());
      const double step = kTwoPi / dp.levels;
      for (Eigen::Index i = 0; i < dp.theta.size(); ++i) r[i] = dp.theta[i] * step;
      return r;
    }
  }
  throw ContractError("embed: unreachable");
}

double Kernel::operator()(const ManifoldPoint& a, const ManifoldPoint& b) const {
  switch (spec_.family) {
    case KernelFamily::SphereSpectral: {
      if (manifold_of(a) != Manifold::Sphere || manifold_of(b) != Manifold::Sphere)
        throw ContractError("sphere-spectral kernel needs sphere points");
      const auto& x = std::get<SpherePoint>(a);
      const auto& y = std::get<SpherePoint>(b);
      // identical coordinates hit cos = 1 exactly, keeping the diagonal at
      // sigma_f2 (u . u alone carries normalization rounding)
      double c = (x.u.array() == y.u.array()).all()
                     ? 1.0
                     : std::min(1.0, std::max(-1.0, x.u.dot(y.u)));
      return spec_.sigma_f2 * sphere_profile(c);
    }
    case KernelFamily::TorusSpectral: {
      if (manifold_of(a) != Manifold::Torus || manifold_of(b) != Manifold::Torus)
        throw ContractError("torus-spectral kernel needs torus points");
      const auto& x = std::get<TorusPoint>(a);
      const auto& y = std::get<TorusPoint>(b);
      if (x.phi.size() != y.phi.size())
        throw ContractError("torus-spectral: dimension mismatch");
      return spec_.sigma_f2 * torus_profile(x.phi - y.phi);
    }
    case KernelFamily::So3Character: {
      if (manifold_of(a) != Manifold::Rotation || manifold_of(b) != Manifold::Rotation)
        throw ContractError("so3-character kernel needs rotation points");
      const auto& x = std::get<RotationPoint>(a);
      const auto& y = std::get<RotationPoint>(b);
      const double omega =
          (x.q.array() == y.q.array()).all() ? 0.0 : geodesic_distance(x, y);
      return spec_.sigma_f2 * so3_profile(omega);
    }
    case KernelFamily::CircleProduct: {
      if (manifold_of(a) != Manifold::DiscreteTorus || manifold_of(b) != Manifold::DiscreteTorus)
        throw ContractError("circle-product kernel needs discrete torus points");
      const auto& x = std::get<DiscreteTorusPoint>(a);
      const auto& y = std::get<DiscreteTorusPoint>(b);
      if (x.theta.size() != y.theta.size() || x.levels != y.levels)
        throw ContractError("circle-product: shape mismatch");
      if (x.levels != table_.levels) throw ContractError("circle-product: table levels mismatch");
      double prod = spec_.sigma_f2;
      for (Eigen::Index i = 0; i < x.theta.size(); ++i)
        prod *= table_.at(x.theta[i] - y.theta[i]);
      return prod;
    }
    case KernelFamily::EuclideanMatern: {
      const double r = (embed(a) - embed(b)).norm();
      return matern52(r, spec_.lengthscale, spec_.sigma_f2);
    }
    case KernelFamily::EuclideanSe: {
      const double r = (embed(a) - embed(b)).norm();
      return squared_exponential(r, spec_.lengthscale, spec_.sigma_f2);
    }
  }
  throw ContractError("kernel: unreachable");
}

Eigen::MatrixXd gram_matrix(const Kernel& kernel, const std::vector<ManifoldPoint>& pts) {
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = kernel(pts[i], pts[i]);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = kernel(pts[i], pts[j]);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

}  // namespace geobandit
