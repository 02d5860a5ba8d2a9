#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>

#include "geobandit/kernels.hpp"
#include "geobandit/rng.hpp"

using namespace geobandit;

namespace {

KernelSpec spec_of(KernelFamily f, double nu, double ell, double sf2 = 1.0,
                   int trunc = 0) {
  KernelSpec s;
  s.family = f;
  s.nu = nu;
  s.lengthscale = ell;
  s.sigma_f2 = sf2;
  s.truncation = trunc;
  return s;
}

ManifoldPoint rand_sphere(Rng& rng) {
  return make_sphere_point(
      Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()));
}

ManifoldPoint rand_torus(Rng& rng, int n) {
  Eigen::VectorXd phi(n);
  for (int i = 0; i < n; ++i) phi[i] = rng.uniform(0, 2 * kPi);
  return make_torus_point(phi);
}

ManifoldPoint rand_rot(Rng& rng) {
  return make_rotation_point(Eigen::Vector4d(rng.normal(), rng.normal(),
                                             rng.normal(), rng.normal()));
}

ManifoldPoint rand_config(Rng& rng, int dims, int levels) {
  Eigen::VectorXi t(dims);
  for (int i = 0; i < dims; ++i) t[i] = static_cast<int>(rng.uniform_int(levels));
  return make_discrete_torus_point(t, levels);
}

}  // namespace

TEST_CASE("circle table matches the extended-precision series, B=8") {
  const CircleKernelTable tab = build_circle_table(8, 1.5, 3.0);
  // Frozen from a 50-digit evaluation of the same series.
  const double expect[8] = {1.0,
                            0.88178351155759230793,
                            0.72804300132634946009,
                            0.6180287974810735468,
                            0.57924843230650578581,
                            0.6180287974810735468,
                            0.72804300132634946009,
                            0.88178351155759230793};
  for (int d = 0; d < 8; ++d)
    CHECK(tab.values[d] == doctest::Approx(expect[d]).epsilon(1e-15));
  CHECK(tab.values[0] == 1.0);
  CHECK(tab.at(-3) == tab.values[5]);
  CHECK(tab.at(11) == tab.values[3]);
}

TEST_CASE("circle table tracks the long double instantiation") {
  for (int B : {2, 3, 8, 16, 64}) {
    for (double nu : {0.5, 1.5, 2.5}) {
      for (double ell : {0.7, 3.0}) {
        const CircleKernelTable tab = build_circle_table(B, nu, ell);
        const auto ref = circle_table_values<long double>(
            B, static_cast<long double>(nu), static_cast<long double>(ell));
        for (int d = 0; d < B; ++d)
          CHECK(tab.values[d] ==
                doctest::Approx(static_cast<double>(ref[d])).epsilon(1e-12));
        // Mirror symmetry of the series on the cycle graph.
        for (int d = 1; d < B; ++d)
          CHECK(tab.values[d] == doctest::Approx(tab.values[B - d]).epsilon(1e-14));
      }
    }
  }
  CHECK_THROWS_AS(build_circle_table(1, 1.5, 3.0), SpecError);
  CHECK_THROWS_AS(build_circle_table(8, -1.0, 3.0), SpecError);
}

TEST_CASE("circle table csv round-trip") {
  const CircleKernelTable tab = build_circle_table(16, 1.5, 2.0);
  const std::string path = "circle_table.csv";
  save_circle_table_csv(tab, path);
  const CircleKernelTable back = load_circle_table_csv(path);
  CHECK(back.levels == 16);
  CHECK(back.nu == tab.nu);
  CHECK(back.lengthscale == tab.lengthscale);
  for (int d = 0; d < 16; ++d) CHECK(back.values[d] == tab.values[d]);
  std::filesystem::remove(path);
}

TEST_CASE("self-similarity is exact for every family") {
  Rng rng(21, "", 0, "kern-self");
  const double sf2 = 7.25;
  {
    Kernel k(spec_of(KernelFamily::SphereSpectral, 2.5, 1.0, sf2));
    for (int i = 0; i < 50; ++i) {
      const auto p = rand_sphere(rng);
      CHECK(k(p, p) == sf2);
    }
  }
  {
    Kernel k(spec_of(KernelFamily::TorusSpectral, 2.5, 1.0, sf2));
    for (int i = 0; i < 50; ++i) {
      const auto p = rand_torus(rng, 3);
      CHECK(k(p, p) == sf2);
    }
  }
  {
    Kernel k(spec_of(KernelFamily::So3Character, 2.5, kPi / 4, sf2));
    for (int i = 0; i < 50; ++i) {
      const auto p = rand_rot(rng);
      CHECK(k(p, p) == sf2);
    }
  }
  {
    Kernel k(spec_of(KernelFamily::CircleProduct, 1.5, 3.0, sf2),
             build_circle_table(8, 1.5, 3.0));
    for (int i = 0; i < 50; ++i) {
      const auto p = rand_config(rng, 6, 8);
      CHECK(k(p, p) == sf2);
    }
  }
}

TEST_CASE("product kernel equals the per-coordinate table product") {
  Rng rng(22, "", 0, "kern-prod");
  const double sf2 = 25.0;
  Kernel k(spec_of(KernelFamily::CircleProduct, 1.5, 3.0, sf2),
             build_circle_table(8, 1.5, 3.0));
  const CircleKernelTable tab = build_circle_table(8, 1.5, 3.0);
  for (int it = 0; it < 200; ++it) {
    const auto pa = rand_config(rng, 10, 8);
    const auto pb = rand_config(rng, 10, 8);
    const auto& a = std::get<DiscreteTorusPoint>(pa);
    const auto& b = std::get<DiscreteTorusPoint>(pb);
    double prod = sf2;
    for (int m = 0; m < 10; ++m) prod *= tab.at(a.theta[m] - b.theta[m]);
    CHECK(k(pa, pb) == doctest::Approx(prod).epsilon(1e-14));
    CHECK(k(pa, pb) == k(pb, pa));
  }
}

TEST_CASE("sphere series truncation error against a long reference") {
  Rng rng(23, "", 0, "kern-sphtr");
  // Default 30 terms vs 100: resolvable scales converge fast; very short
  // lengthscales keep visible tail mass (frozen: 7.5e-3 at 0.5, 1.9e-9 at 3).
  for (auto [ell, bound] : {std::pair{0.5, 8e-3}, std::pair{3.0, 1e-8}}) {
    Kernel k30(spec_of(KernelFamily::SphereSpectral, 2.5, ell));
    Kernel k100(spec_of(KernelFamily::SphereSpectral, 2.5, ell, 1.0, 100));
    double worst = 0;
    for (int it = 0; it < 100; ++it) {
      const auto a = rand_sphere(rng), b = rand_sphere(rng);
      const double v30 = k30(a, b), v100 = k100(a, b);
      worst = std::max(worst, std::abs(v30 - v100) / std::abs(v100));
    }
    CHECK(worst < bound);
  }
}

TEST_CASE("torus series truncation error against a long reference") {
  Rng rng(24, "", 0, "kern-tortr");
  Kernel k10(spec_of(KernelFamily::TorusSpectral, 2.5, 1.0));
  Kernel k40(spec_of(KernelFamily::TorusSpectral, 2.5, 1.0, 1.0, 40));
  double worst = 0;
  for (int it = 0; it < 100; ++it) {
    const auto a = rand_torus(rng, 2), b = rand_torus(rng, 2);
    worst = std::max(worst, std::abs(k10(a, b) - k40(a, b)) / std::abs(k40(a, b)));
  }
  CHECK(worst < 1.5e-3);  // frozen reference run: 6.1e-4
  // Octant guard: 64 terms per axis would overflow the uint8 index space.
  CHECK_THROWS_AS(Kernel(spec_of(KernelFamily::TorusSpectral, 2.5, 1.0, 1.0, 64)),
                  SpecError);
}

TEST_CASE("rotation series truncation error against a long reference") {
  Rng rng(25, "", 0, "kern-rottr");
  Kernel k16(spec_of(KernelFamily::So3Character, 2.5, kPi / 4));
  Kernel k64(spec_of(KernelFamily::So3Character, 2.5, kPi / 4, 1.0, 64));
  double worst = 0;
  for (int it = 0; it < 200; ++it) {
    const auto a = rand_rot(rng), b = rand_rot(rng);
    worst = std::max(worst, std::abs(k16(a, b) - k64(a, b)));
  }
  CHECK(worst < 1e-3);  // frozen reference run: 2.8e-4
}

TEST_CASE("gram matrices are positive semidefinite") {
  Rng rng(26, "", 0, "kern-psd");
  auto check_psd = [](const Kernel& k, const std::vector<ManifoldPoint>& pts) {
    const Eigen::MatrixXd K = gram_matrix(k, pts);
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    CHECK(es.eigenvalues().minCoeff() > -1e-9 * k.variance());
    // Shifted by the observation noise the system must be factorizable.
    const Eigen::MatrixXd A =
        K + 0.15 * Eigen::MatrixXd::Identity(K.rows(), K.cols());
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    CHECK(llt.info() == Eigen::Success);
  };
  {
    std::vector<ManifoldPoint> pts;
    for (int i = 0; i < 40; ++i) pts.push_back(rand_sphere(rng));
    check_psd(Kernel(spec_of(KernelFamily::SphereSpectral, 2.5, 0.35, 225.0)), pts);
    check_psd(Kernel(spec_of(KernelFamily::EuclideanMatern, 2.5, 1.5, 225.0)), pts);
  }
  {
    std::vector<ManifoldPoint> pts;
    for (int i = 0; i < 40; ++i) pts.push_back(rand_torus(rng, 3));
    check_psd(Kernel(spec_of(KernelFamily::TorusSpectral, 2.5, 1.0, 225.0)), pts);
    check_psd(Kernel(spec_of(KernelFamily::EuclideanSe, 2.5, 1.5, 225.0)), pts);
  }
  {
    std::vector<ManifoldPoint> pts;
    for (int i = 0; i < 40; ++i) pts.push_back(rand_rot(rng));
    check_psd(Kernel(spec_of(KernelFamily::So3Character, 2.5, kPi / 4, 225.0)), pts);
  }
  {
    std::vector<ManifoldPoint> pts;
    for (int i = 0; i < 40; ++i) pts.push_back(rand_config(rng, 8, 8));
    check_psd(Kernel(spec_of(KernelFamily::CircleProduct, 1.5, 3.0, 25.0),
                     build_circle_table(8, 1.5, 3.0)),
              pts);
  }
}

TEST_CASE("intrinsic kernels are invariant under the manifold symmetries") {
  Rng rng(27, "", 0, "kern-inv");
  {  // sphere: simultaneous rotation
    Kernel k(spec_of(KernelFamily::SphereSpectral, 2.5, 0.7));
    const Eigen::Quaterniond Q =
        Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal())
            .normalized();
    const Eigen::Matrix3d R = Q.toRotationMatrix();
    for (int it = 0; it < 50; ++it) {
      const auto a = std::get<SpherePoint>(rand_sphere(rng));
      const auto b = std::get<SpherePoint>(rand_sphere(rng));
      const double v1 = k(ManifoldPoint(a), ManifoldPoint(b));
      const double v2 = k(make_sphere_point(Eigen::Vector3d(R * a.u)),
                          make_sphere_point(Eigen::Vector3d(R * b.u)));
      CHECK(v1 == doctest::Approx(v2).epsilon(1e-12));
    }
  }
  {  // torus: common shift
    Kernel k(spec_of(KernelFamily::TorusSpectral, 2.5, 1.0));
    for (int it = 0; it < 50; ++it) {
      const auto a = std::get<TorusPoint>(rand_torus(rng, 3));
      const auto b = std::get<TorusPoint>(rand_torus(rng, 3));
      Eigen::VectorXd shift(3);
      shift << rng.uniform(0, 2 * kPi), rng.uniform(0, 2 * kPi),
          rng.uniform(0, 2 * kPi);
      const double v1 = k(ManifoldPoint(a), ManifoldPoint(b));
      const double v2 = k(make_torus_point(Eigen::VectorXd(a.phi + shift)),
                          make_torus_point(Eigen::VectorXd(b.phi + shift)));
      CHECK(v1 == doctest::Approx(v2).epsilon(1e-12));
    }
  }
  {  // rotations: common left multiplication
    Kernel k(spec_of(KernelFamily::So3Character, 2.5, kPi / 4));
    const Eigen::Quaterniond G =
        Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal())
            .normalized();
    for (int it = 0; it < 50; ++it) {
      const auto a = std::get<RotationPoint>(rand_rot(rng));
      const auto b = std::get<RotationPoint>(rand_rot(rng));
      const Eigen::Quaterniond qa(a.q[0], a.q[1], a.q[2], a.q[3]);
      const Eigen::Quaterniond qb(b.q[0], b.q[1], b.q[2], b.q[3]);
      const Eigen::Quaterniond ga = G * qa, gb = G * qb;
      const double v1 = k(ManifoldPoint(a), ManifoldPoint(b));
      const double v2 =
          k(make_rotation_point(Eigen::Vector4d(ga.w(), ga.x(), ga.y(), ga.z())),
            make_rotation_point(Eigen::Vector4d(gb.w(), gb.x(), gb.y(), gb.z())));
      CHECK(v1 == doctest::Approx(v2).epsilon(1e-12));
    }
  }
  {  // discrete torus: common level shift mod B
    Kernel k(spec_of(KernelFamily::CircleProduct, 1.5, 3.0),
             build_circle_table(8, 1.5, 3.0));
    for (int it = 0; it < 50; ++it) {
      const auto a = std::get<DiscreteTorusPoint>(rand_config(rng, 6, 8));
      const auto b = std::get<DiscreteTorusPoint>(rand_config(rng, 6, 8));
      const int s = static_cast<int>(rng.uniform_int(8));
      Eigen::VectorXi as = a.theta, bs = b.theta;
      for (int m = 0; m < 6; ++m) {
        as[m] = (as[m] + s) % 8;
        bs[m] = (bs[m] + s) % 8;
      }
      const double v1 = k(ManifoldPoint(a), ManifoldPoint(b));
      const double v2 = k(make_discrete_torus_point(as, 8),
                          make_discrete_torus_point(bs, 8));
      CHECK(v1 == doctest::Approx(v2).epsilon(1e-13));
    }
  }
}

TEST_CASE("euclidean baseline ignores the topology the intrinsic kernel sees") {
  // Two nearby torus points across the 0 / 2pi seam: intrinsically close,
  // far apart in raw angle coordinates.
  Eigen::VectorXd pa(2), pb(2);
  pa << 0.05, 1.0;
  pb << 2 * kPi - 0.05, 1.0;
  const ManifoldPoint a = make_torus_point(pa);
  const ManifoldPoint b = make_torus_point(pb);
  Kernel intrinsic(spec_of(KernelFamily::TorusSpectral, 2.5, 1.0));
  Kernel euclid(spec_of(KernelFamily::EuclideanMatern, 2.5, 1.0));
  CHECK(intrinsic(a, b) > 0.98);
  CHECK(euclid(a, b) < 0.05);

  // The rotation embedding is the rotation matrix, so the double cover is
  // handled even by the extrinsic kernel.
  const ManifoldPoint r1 = make_rotation_point(Eigen::Vector4d(0.3, -0.4, 0.5, -0.6));
  Kernel erot(spec_of(KernelFamily::EuclideanMatern, 2.5, 1.0));
  CHECK(Kernel::embed(r1).size() == 9);
  CHECK(erot(r1, r1) == doctest::Approx(1.0).epsilon(1e-12));

  // Sphere embedding is the unit vector itself.
  const ManifoldPoint s1 = make_sphere_point(Eigen::Vector3d(0, 0, 1));
  CHECK(Kernel::embed(s1).size() == 3);
  // Discrete configs embed as unwrapped phases 2 pi theta / B.
  Eigen::VectorXi t(2);
  t << 2, 6;
  const ManifoldPoint d1 = make_discrete_torus_point(t, 8);
  const Eigen::VectorXd e = Kernel::embed(d1);
  CHECK(e[0] == doctest::Approx(2 * kPi * 2 / 8).epsilon(1e-15));
  CHECK(e[1] == doctest::Approx(2 * kPi * 6 / 8).epsilon(1e-15));
}

TEST_CASE("graph filter differs from a sampled continuous filter") {
  // The discrete-circle eigenvalues 4 sin^2(pi k / B) depart from the
  // continuous k^2 away from k = 0, so the two families must not collapse
  // onto each other at the lattice points.
  const CircleKernelTable tab = build_circle_table(8, 2.5, 1.0);
  Kernel cont(spec_of(KernelFamily::TorusSpectral, 2.5, 1.0));
  double maxdev = 0;
  for (int d = 1; d < 8; ++d) {
    Eigen::VectorXd z(1), w(1);
    z << 0.0;
    w << 2 * kPi * d / 8;
    const double c = cont(make_torus_point(z), make_torus_point(w));
    maxdev = std::max(maxdev, std::abs(c - tab.values[d]));
  }
  CHECK(maxdev > 1e-3);
}

TEST_CASE("profile helpers agree with the full evaluation") {
  Rng rng(28, "", 0, "kern-prof");
  Kernel ks(spec_of(KernelFamily::SphereSpectral, 2.5, 0.7, 3.0));
  for (int it = 0; it < 30; ++it) {
    const auto a = rand_sphere(rng), b = rand_sphere(rng);
    const double c = std::get<SpherePoint>(a).u.dot(std::get<SpherePoint>(b).u);
    CHECK(ks(a, b) ==
          doctest::Approx(3.0 * ks.sphere_profile(std::clamp(c, -1.0, 1.0)))
              .epsilon(1e-12));
  }
  Kernel kr(spec_of(KernelFamily::So3Character, 2.5, kPi / 4, 2.0));
  for (int it = 0; it < 30; ++it) {
    const auto a = rand_rot(rng), b = rand_rot(rng);
    const double omega = geodesic_distance(a, b);
    CHECK(kr(a, b) == doctest::Approx(2.0 * kr.so3_profile(omega)).epsilon(1e-12));
  }
}

TEST_CASE("scalar profiles at closed-form points") {
  CHECK(matern52(1.0, 1.0, 1.0) == doctest::Approx(0.5239941088318203).epsilon(1e-15));
  CHECK(matern52(0.0, 1.0, 4.0) == 4.0);
  CHECK(squared_exponential(1.0, 1.0, 1.0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(squared_exponential(0.0, 2.0, 9.0) == 9.0);
  // Monotone decay.
  double prev = matern52(0.0, 1.0, 1.0);
  for (double r = 0.1; r < 5.0; r += 0.1) {
    const double v = matern52(r, 1.0, 1.0);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("spec validation and manifold mismatch") {
  KernelSpec s = spec_of(KernelFamily::EuclideanMatern, 1.5, 1.0);
  CHECK_THROWS_AS(Kernel k(s), SpecError);  // only nu = 5/2 implemented
  KernelSpec neg = spec_of(KernelFamily::SphereSpectral, 2.5, -1.0);
  CHECK_THROWS_AS(Kernel k(neg), SpecError);
  KernelSpec nosig = spec_of(KernelFamily::SphereSpectral, 2.5, 1.0, 0.0);
  CHECK_THROWS_AS(Kernel k(nosig), SpecError);

  KernelSpec nt = spec_of(KernelFamily::CircleProduct, 1.5, 3.0);
  CHECK_THROWS_AS(Kernel k(nt), SpecError);  // table constructor required
  KernelSpec wrongfam = spec_of(KernelFamily::SphereSpectral, 2.5, 1.0);
  CHECK_THROWS_AS(Kernel(wrongfam, build_circle_table(8, 1.5, 3.0)), SpecError);

  Kernel sphere_k(spec_of(KernelFamily::SphereSpectral, 2.5, 1.0));
  Eigen::VectorXd phi(2);
  phi << 1.0, 2.0;
  CHECK_THROWS_AS(sphere_k(make_torus_point(phi), make_torus_point(phi)),
                  ContractError);

  CHECK(std::string(kernel_family_name(KernelFamily::CircleProduct)) ==
        "circle-product");
  CHECK(kernel_family_from_name("sphere-spectral") == KernelFamily::SphereSpectral);
  CHECK_THROWS_AS(kernel_family_from_name("nope"), ConfigError);
}
