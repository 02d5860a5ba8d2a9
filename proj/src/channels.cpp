#include "geobandit/channels.hpp"

#include <algorithm>
#include <cmath>

#include "geobandit/common.hpp"

namespace geobandit {

namespace {

constexpr double kSpeedOfLight = 2.99792458e8;

// Unit vector uniform on the upper hemisphere (z >= 0).
Eigen::Vector3d draw_hemisphere_dir(Rng& rng) {
  const double z = rng.uniform();
  const double phi = rng.uniform(0.0, kTwoPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

// Dirichlet(1,...,1) shares via normalized exponentials.
Eigen::VectorXd draw_simplex(int n, Rng& rng) {
  Eigen::VectorXd e(n);
  for (int i = 0; i < n; ++i) e[i] = -std::log(std::max(rng.uniform(), 1e-300));
  return e / e.sum();
}

Cplx draw_cn(Rng& rng) {
  // CN(0,1): independent real/imaginary N(0, 1/2).
  const double s = 1.0 / std::sqrt(2.0);
  const double re = s * rng.normal();
  const double im = s * rng.normal();
  return {re, im};
}

Eigen::Matrix3d quat_to_matrix(const Eigen::Vector4d& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

// Sum of element phasors for a planar array: AF(d) = sum_i exp(j*2*pi*d.p_i),
// positions in wavelengths.
Cplx array_factor(const Eigen::Matrix3Xd& pos, const Eigen::Vector3d& d) {
  Cplx acc{0, 0};
  for (Eigen::Index i = 0; i < pos.cols(); ++i) {
    const double ph = kTwoPi * d.dot(pos.col(i));
    acc += Cplx{std::cos(ph), std::sin(ph)};
  }
  return acc;
}

Eigen::Matrix3Xd upa_positions(int rows, int cols, double spacing) {
  Eigen::Matrix3Xd p(3, rows * cols);
  int idx = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      p.col(idx++) << (c - 0.5 * (cols - 1)) * spacing,
          (r - 0.5 * (rows - 1)) * spacing, 0.0;
    }
  return p;
}

// Positions (in wavelengths) of the exp4 array: fixed 3x2 half-wavelength
// core plus two elements on a ring of radius 1.5 at angles theta.
Eigen::Matrix3Xd exp4_positions(const TorusPoint& arm) {
  Eigen::Matrix3Xd p(3, 8);
  int idx = 0;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 2; ++r)
      p.col(idx++) << (c - 1) * 0.5, (r - 0.5) * 0.5, 0.0;
  for (int k = 0; k < 2; ++k)
    p.col(idx++) << 1.5 * std::cos(arm.phi[k]), 1.5 * std::sin(arm.phi[k]), 0.0;
  return p;
}

template <typename P>
CandidateSet to_candidates(Manifold m, const std::vector<P>& pts) {
  std::vector<ManifoldPoint> v;
  v.reserve(pts.size());
  for (const auto& p : pts) v.emplace_back(p);
  return make_candidate_set(m, std::move(v));
}

}  // namespace

StaticChannel StaticChannel::create(const StaticChannelConfig& config,
                                    Rng& channel_rng, Rng& aux_rng) {
  if (config.experiment < 1 || config.experiment > 4)
    throw ConfigError("experiment must be 1..4");
  if (config.clusters < 1) throw ConfigError("clusters must be >= 1");
  if (config.noise_variance < 0) throw ConfigError("noise variance must be >= 0");
  StaticChannel ch;
  ch.config_ = config;
  ch.noise_std_ = std::sqrt(config.noise_variance);

  const int C = config.clusters;
  ch.directions.resize(3, C);
  for (int c = 0; c < C; ++c) ch.directions.col(c) = draw_hemisphere_dir(channel_rng);
  const Eigen::VectorXd shares = draw_simplex(C, channel_rng);
  ch.mean_amp = Eigen::VectorXd::Zero(C);
  ch.diffuse_std.resize(C);
  const double kap = config.rician_kappa;
  if (config.rician_mean) {
    ch.mean_amp[0] = std::sqrt(kap / (kap + 1.0));
    ch.diffuse_std = (shares / (kap + 1.0)).cwiseSqrt();
  } else {
    ch.diffuse_std = shares.cwiseSqrt();
  }

  switch (config.experiment) {
    case 1:
      ch.positions_ = upa_positions(8, 8, 0.5);
      ch.candidates_ = to_candidates(Manifold::Sphere, fibonacci_sphere(64, true));
      break;
    case 2: {
      ch.positions_ = upa_positions(8, 8, 0.5);
      ch.candidates_ = to_candidates(Manifold::Torus, torus_lattice(3, 8));
      // Sub-beams steer toward the cluster directions of a fixed calibration
      // draw, shared by every cell of a campaign.
      Eigen::Matrix3Xd cal(3, 3);
      for (int k = 0; k < 3; ++k) cal.col(k) = draw_hemisphere_dir(aux_rng);
      ch.sub_beam_resp_.resize(3, C);
      for (int k = 0; k < 3; ++k)
        for (int c = 0; c < C; ++c) {
          // b_k^H a(u_c) = AF(u_c - d_k)
          ch.sub_beam_resp_(k, c) = array_factor(
              ch.positions_, ch.directions.col(c) - cal.col(k));
        }
      break;
    }
    case 3:
      ch.positions_ = upa_positions(8, 8, 0.5);
      ch.candidates_ = to_candidates(Manifold::Rotation, super_fibonacci_so3(200));
      break;
    case 4: {
      ch.candidates_ = to_candidates(Manifold::Torus, torus_lattice(2, 20));
      ch.probe_dirs_.reserve(config.probe_count);
      auto fib = fibonacci_sphere(config.probe_count, true);
      for (const auto& p : fib) ch.probe_dirs_.push_back(p);
      ch.est_draws_.resize(C, config.mc_draws);
      for (int n = 0; n < config.mc_draws; ++n)
        for (int c = 0; c < C; ++c)
          ch.est_draws_(c, n) = ch.mean_amp[c] + ch.diffuse_std[c] * draw_cn(aux_rng);
      break;
    }
  }

  // Calibrate the amplitude so the best candidate's mean reward lands
  // snr_db above the noise standard deviation.
  const auto nc = static_cast<Eigen::Index>(ch.candidates_.points.size());
  ch.candidate_values.resize(nc);
  double raw_best = 0;
  Eigen::Index best_idx = 0;
  for (Eigen::Index i = 0; i < nc; ++i) {
    const double v = ch.expected_reward(ch.candidates_.points[i]);
    ch.candidate_values[i] = v;
    if (v > raw_best) {
      raw_best = v;
      best_idx = i;
    }
  }
  if (raw_best <= 0) throw SpecError("degenerate channel: best reward is 0");
  const double target = ch.noise_std_ * std::pow(10.0, config.snr_db / 10.0);
  ch.amp_ = std::sqrt(target / raw_best);
  ch.candidate_values *= ch.amp_ * ch.amp_;
  ch.best_arm_ = ch.candidates_.points[best_idx];
  ch.best_value_ = ch.candidate_values[best_idx];
  return ch;
}

Eigen::VectorXcd StaticChannel::cluster_response(const ManifoldPoint& arm) const {
  const int C = config_.clusters;
  Eigen::VectorXcd r(C);
  switch (config_.experiment) {
    case 1: {
      const auto& u = std::get<SpherePoint>(arm);
      for (int c = 0; c < C; ++c)
        r[c] = array_factor(positions_, directions.col(c) - u.u);
      break;
    }
    case 2: {
      const auto& phases = std::get<TorusPoint>(arm).phi;
      for (int c = 0; c < C; ++c) {
        Cplx acc{0, 0};
        for (int k = 0; k < 3; ++k)
          acc += Cplx{std::cos(phases[k]), std::sin(phases[k])} * sub_beam_resp_(k, c);
        r[c] = acc;
      }
      break;
    }
    case 3: {
      const auto& q = std::get<RotationPoint>(arm);
      const Eigen::Matrix3d rot = quat_to_matrix(q.q);
      for (int c = 0; c < C; ++c) {
        const Eigen::Vector3d d = rot.transpose() * directions.col(c);
        r[c] = array_factor(positions_, d);
      }
      break;
    }
    default:
      throw ContractError("cluster_response: not an exp1-3 channel");
  }
  return r;
}

double StaticChannel::quad_form_value(const Eigen::VectorXcd& resp) const {
  Cplx mean_part{0, 0};
  double diffuse = 0;
  for (int c = 0; c < resp.size(); ++c) {
    mean_part += mean_amp[c] * resp[c];
    diffuse += diffuse_std[c] * diffuse_std[c] * std::norm(resp[c]);
  }
  return amp_ * amp_ * (std::norm(mean_part) + diffuse);
}

Eigen::MatrixXcd StaticChannel::exp4_probe_response(const TorusPoint& arm) const {
  const Eigen::Matrix3Xd pos = exp4_positions(arm);
  const int K = static_cast<int>(probe_dirs_.size());
  const int C = config_.clusters;
  Eigen::MatrixXcd m(K, C);
  for (int k = 0; k < K; ++k)
    for (int c = 0; c < C; ++c)
      m(k, c) = array_factor(pos, directions.col(c) - probe_dirs_[k].u);
  return m;
}

double StaticChannel::exp4_value(const TorusPoint& arm,
                                 const Eigen::MatrixXcd& draws, bool average) const {
  const Eigen::MatrixXcd m = exp4_probe_response(arm);
  const Eigen::MatrixXcd v = m * draws;  // probes x draws
  double acc = 0;
  for (Eigen::Index n = 0; n < v.cols(); ++n) {
    double best = 0;
    for (Eigen::Index k = 0; k < v.rows(); ++k)
      best = std::max(best, std::norm(v(k, n)));
    acc += best;
  }
  if (average) acc /= static_cast<double>(v.cols());
  return amp_ * amp_ * acc;
}

double StaticChannel::expected_reward(const ManifoldPoint& arm) const {
  if (config_.experiment == 4)
    return exp4_value(std::get<TorusPoint>(arm), est_draws_, true);
  return quad_form_value(cluster_response(arm));
}

double StaticChannel::draw_reward(const ManifoldPoint& arm, Rng& rng) const {
  const int C = config_.clusters;
  Eigen::VectorXcd gains(C);
  for (int c = 0; c < C; ++c)
    gains[c] = mean_amp[c] + diffuse_std[c] * draw_cn(rng);
  double value;
  if (config_.experiment == 4) {
    value = exp4_value(std::get<TorusPoint>(arm), gains, false);
  } else {
    const Eigen::VectorXcd resp = cluster_response(arm);
    value = amp_ * amp_ * std::norm(resp.cwiseProduct(gains).sum());
  }
  return value + noise_std_ * rng.normal();
}

// ---------------------------------------------------------------------------

RisChannel RisChannel::create(const RisChannelConfig& config, Rng& rng) {
  if (config.levels < 2) throw ConfigError("levels must be >= 2");
  if (config.rows < 1 || config.cols < 1)
    throw ConfigError("array must have at least one element");
  if (config.clusters < 1) throw ConfigError("clusters must be >= 1");
  if (config.carrier_hz <= 0) throw ConfigError("carrier must be positive");
  if (config.tti_s <= 0) throw ConfigError("tti must be positive");
  if (config.speed_kmh < 0) throw ConfigError("speed must be >= 0");
  RisChannel ch;
  ch.config_ = config;
  const int M = config.rows * config.cols;
  const int C = config.clusters;
  const double lambda = kSpeedOfLight / config.carrier_hz;
  const double k0 = kTwoPi / lambda;

  // RIS in the x = 0 plane, broadside +x, center 2 m up.
  const Eigen::Vector3d ris_center{0, 0, 2.0};
  Eigen::Matrix3Xd pos(3, M);
  int idx = 0;
  for (int r = 0; r < config.rows; ++r)
    for (int c = 0; c < config.cols; ++c)
      pos.col(idx++) << 0.0, (c - 0.5 * (config.cols - 1)) * lambda / 2,
          (r - 0.5 * (config.rows - 1)) * lambda / 2;

  auto steer = [&](const Eigen::Vector3d& u) {
    Eigen::VectorXcd a(M);
    for (int m = 0; m < M; ++m) {
      const double ph = k0 * u.dot(pos.col(m));
      a[m] = Cplx{std::cos(ph), std::sin(ph)};
    }
    return a;
  };
  // Unit direction uniform on the front halfspace (x > 0) of the RIS.
  auto front_dir = [&]() {
    const double x = rng.uniform();
    const double phi = rng.uniform(0.0, kTwoPi);
    const double r = std::sqrt(std::max(0.0, 1.0 - x * x));
    return Eigen::Vector3d{x, r * std::cos(phi), r * std::sin(phi)};
  };

  const Eigen::Vector3d bs{200, 0, 20};
  const Eigen::Vector3d ms{rng.uniform(5.0, 11.0), rng.uniform(-3.0, 3.0), 1.5};

  // BS -> RIS: static Rician.
  {
    const Eigen::Vector3d d = bs - ris_center;
    const double dist = d.norm();
    const double amp = lambda / (4.0 * kPi * dist);
    const double kf = std::pow(10.0, config.k_bs_ris_db / 10.0);
    const double chi = rng.uniform(0.0, kTwoPi);
    ch.bs_ris_los =
        amp * std::sqrt(kf / (kf + 1.0)) * Cplx{std::cos(chi), std::sin(chi)} *
        steer(d / dist);
    const Eigen::VectorXd shares = draw_simplex(C, rng);
    ch.bs_ris_diffuse = Eigen::VectorXcd::Zero(M);
    for (int c = 0; c < C; ++c) {
      const Cplx g = std::sqrt(shares[c]) * draw_cn(rng);
      ch.bs_ris_diffuse += amp * std::sqrt(1.0 / (kf + 1.0)) * g * steer(front_dir());
    }
    ch.bs_ris_ = ch.bs_ris_los + ch.bs_ris_diffuse;
  }

  const double fd = (config.speed_kmh / 3.6) / lambda;  // max Doppler, Hz
  auto doppler = [&]() {
    const double alpha = rng.uniform(0.0, kTwoPi);
    return kTwoPi * fd * std::cos(alpha) * config.tti_s;  // rad per TTI
  };

  // RIS -> MS: Rician, every component drifting.
  {
    const Eigen::Vector3d d = ms - ris_center;
    const double dist = d.norm();
    const double amp = lambda / (4.0 * kPi * dist);
    const double kf = std::pow(10.0, config.k_ris_ms_db / 10.0);
    ch.ris_ms_comp.resize(M, 1 + C);
    ch.ris_ms_omega.resize(1 + C);
    const double psi = rng.uniform(0.0, kTwoPi);
    ch.ris_ms_comp.col(0) =
        amp * std::sqrt(kf / (kf + 1.0)) * Cplx{std::cos(psi), std::sin(psi)} *
        steer(d / dist);
    ch.ris_ms_omega[0] = doppler();
    const Eigen::VectorXd shares = draw_simplex(C, rng);
    for (int c = 0; c < C; ++c) {
      const Cplx g = std::sqrt(shares[c]) * draw_cn(rng);
      ch.ris_ms_comp.col(1 + c) =
          amp * std::sqrt(1.0 / (kf + 1.0)) * g * steer(front_dir());
      ch.ris_ms_omega[1 + c] = doppler();
    }
  }

  // Direct BS -> MS: Rayleigh clusters behind a fixed excess loss.
  {
    const double dist = (bs - ms).norm();
    const double amp =
        lambda / (4.0 * kPi * dist) * std::pow(10.0, -config.direct_excess_db / 20.0);
    const Eigen::VectorXd shares = draw_simplex(C, rng);
    ch.direct_comp.resize(C);
    ch.direct_omega.resize(C);
    for (int c = 0; c < C; ++c) {
      ch.direct_comp[c] = amp * std::sqrt(shares[c]) * draw_cn(rng);
      ch.direct_omega[c] = doppler();
    }
  }

  ch.phase_ris_ = Eigen::VectorXd::Zero(1 + C);
  ch.phase_dir_ = Eigen::VectorXd::Zero(C);
  ch.refresh();
  return ch;
}

void RisChannel::refresh() {
  const Eigen::Index J = ris_ms_comp.cols();
  Eigen::VectorXcd phasor(J);
  for (Eigen::Index j = 0; j < J; ++j)
    phasor[j] = Cplx{std::cos(phase_ris_[j]), std::sin(phase_ris_[j])};
  cascade_ = bs_ris_.cwiseProduct(ris_ms_comp * phasor);
  direct_ = Cplx{0, 0};
  for (Eigen::Index c = 0; c < direct_comp.size(); ++c)
    direct_ += direct_comp[c] * Cplx{std::cos(phase_dir_[c]), std::sin(phase_dir_[c])};
}

void RisChannel::advance() {
  ++tti_;
  phase_ris_ += ris_ms_omega;
  phase_dir_ += direct_omega;
  refresh();
}

double RisChannel::noiseless_rsrp_db(const DiscreteTorusPoint& theta) const {
  if (theta.levels != config_.levels ||
      theta.theta.size() != cascade_.size())
    throw ContractError("configuration does not match the surface");
  Cplx s = direct_;
  for (Eigen::Index m = 0; m < cascade_.size(); ++m) {
    const double ph = kTwoPi * theta.theta[m] / config_.levels;
    s += Cplx{std::cos(ph), std::sin(ph)} * cascade_[m];
  }
  return 10.0 * std::log10(std::max(std::norm(s), 1e-300));
}

double RisChannel::rsrp_db(const DiscreteTorusPoint& theta, Rng& noise_rng) const {
  return noiseless_rsrp_db(theta) + config_.meas_noise_db * noise_rng.normal();
}

RisChannel::Oracle RisChannel::oracle() const {
  const int B = config_.levels;
  const Eigen::Index M = cascade_.size();
  // Align every element's phase to the direct path; with a negligible direct
  // path any common reference works, use zero.
  double ref = 0;
  if (std::abs(direct_) > 1e-12 * cascade_.cwiseAbs().sum())
    ref = std::arg(direct_);
  Eigen::VectorXi theta(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    const double want = ref - std::arg(cascade_[m]);
    long level = std::lround(want * B / kTwoPi);
    theta[m] = static_cast<int>(((level % B) + B) % B);
  }
  Oracle o;
  o.config = make_discrete_torus_point(theta, B);
  o.rsrp_db = noiseless_rsrp_db(o.config);
  return o;
}

}  // namespace geobandit
