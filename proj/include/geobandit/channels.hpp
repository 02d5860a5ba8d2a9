#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

#include "geobandit/geometry.hpp"
#include "geobandit/rng.hpp"

namespace geobandit {

using Cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Static clustered multipath channel behind the four beam-alignment
// experiments:
//   exp1  beam codebook on S^2 (8x8 half-wavelength UPA, 64-beam codebook)
//   exp2  analog combiner phases on T^3 (three fixed sub-beams)
//   exp3  array orientation on SO(3) (rotated UPA, broadside beam)
//   exp4  element placement on T^2 (3x2 core + 2 ring elements, 16 probes)
// One dominant cluster carries a deterministic Rician mean (power ratio
// kappa : 1 against the residual); rewards are received-power draws with
// additive Gaussian noise.  Amplitudes are calibrated per realization so the
// best candidate's mean reward sits at the configured SNR above the noise
// floor.

struct StaticChannelConfig {
  int experiment = 1;  // 1..4
  int clusters = 3;
  double rician_kappa = 6.0;
  bool rician_mean = true;  // false: zero-mean CN(0, P_c) on every cluster
  double snr_db = 20.0;
  double noise_variance = 0.15;
  int probe_count = 16;  // exp4
  int mc_draws = 1000;   // exp4 expected-reward estimate
};

class StaticChannel {
 public:
  // channel_rng drives the realization; aux_rng supplies the fixed
  // calibration directions (exp2) or the frozen estimation draws (exp4).
  static StaticChannel create(const StaticChannelConfig& config, Rng& channel_rng,
                              Rng& aux_rng);

  // Mean reward; closed form for exp1-3, frozen Monte-Carlo estimate for exp4.
  double expected_reward(const ManifoldPoint& arm) const;

  // One noisy pull.
  double draw_reward(const ManifoldPoint& arm, Rng& rng) const;

  const CandidateSet& candidates() const { return candidates_; }
  const ManifoldPoint& best_arm() const { return best_arm_; }
  double best_value() const { return best_value_; }
  double noise_std() const { return noise_std_; }
  int experiment() const { return config_.experiment; }

  // Exposed for diagnostics and tests.
  Eigen::Matrix3Xd directions;     // cluster unit vectors
  Eigen::VectorXd mean_amp;        // deterministic amplitude per cluster
  Eigen::VectorXd diffuse_std;     // diffuse std per cluster
  Eigen::VectorXd candidate_values;  // calibrated mean reward per candidate

 private:
  StaticChannelConfig config_;
  Eigen::Matrix3Xd positions_;  // element positions in wavelengths (exp1-3)
  Eigen::MatrixXcd sub_beam_resp_;  // exp2: B_kc = b_k^H a(u_c)
  std::vector<SpherePoint> probe_dirs_;  // exp4
  Eigen::MatrixXcd est_draws_;  // exp4: clusters x mc_draws complex gains
  CandidateSet candidates_;
  ManifoldPoint best_arm_;
  double best_value_ = 0;
  double amp_ = 1.0;  // calibration scale on the channel amplitude
  double noise_std_ = 0;

  // Complex response of the front-end for one cluster direction.
  Eigen::VectorXcd cluster_response(const ManifoldPoint& arm) const;  // exp1-3
  double quad_form_value(const Eigen::VectorXcd& resp) const;
  double exp4_value(const TorusPoint& arm, const Eigen::MatrixXcd& draws,
                    bool average) const;
  Eigen::MatrixXcd exp4_probe_response(const TorusPoint& arm) const;
};

// ---------------------------------------------------------------------------
// Time-varying RIS link: BS -> RIS (static Rician), RIS -> MS (Rician with
// per-cluster Doppler phase drift), plus a weak direct BS -> MS Rayleigh path
// with a configured excess loss.  Each cluster carries Doppler
// f_D = (v / lambda) cos(alpha) with alpha uniform, applied as a per-TTI
// phase increment.

struct RisChannelConfig {
  double carrier_hz = 2.605e9;
  int rows = 10, cols = 10;  // M = rows * cols elements
  int levels = 8;            // B phase levels
  double speed_kmh = 0.08;
  double tti_s = 1e-3;
  int clusters = 3;  // diffuse clusters per mobile link
  double k_bs_ris_db = 5.0;
  double k_ris_ms_db = 3.0;
  double direct_excess_db = 38.0;
  double meas_noise_db = 1.0;
};

class RisChannel {
 public:
  static RisChannel create(const RisChannelConfig& config, Rng& rng);

  void advance();  // one TTI of Doppler phase drift

  double noiseless_rsrp_db(const DiscreteTorusPoint& theta) const;
  double rsrp_db(const DiscreteTorusPoint& theta, Rng& noise_rng) const;

  struct Oracle {
    DiscreteTorusPoint config;
    double rsrp_db = 0;
  };
  // Per-element phase alignment against the direct path (zero reference when
  // the direct path is negligible), rounded to the nearest level.
  Oracle oracle() const;

  int elements() const { return static_cast<int>(cascade_.size()); }
  int levels() const { return config_.levels; }
  int tti() const { return tti_; }
  const RisChannelConfig& config() const { return config_; }

  // Component state, exposed for energy-accounting tests.
  Eigen::VectorXcd bs_ris_los;       // per-element LOS part of BS->RIS
  Eigen::VectorXcd bs_ris_diffuse;   // per-element diffuse part of BS->RIS
  Eigen::MatrixXcd ris_ms_comp;      // M x (1 + clusters), column 0 = LOS
  Eigen::VectorXd ris_ms_omega;      // phase increment per TTI
  Eigen::VectorXcd direct_comp;      // direct-path cluster gains
  Eigen::VectorXd direct_omega;

 private:
  void refresh();

  RisChannelConfig config_;
  Eigen::VectorXcd bs_ris_;   // static per-element BS->RIS channel
  Eigen::VectorXd phase_ris_, phase_dir_;
  Eigen::VectorXcd cascade_;  // current c_m
  Cplx direct_{0, 0};
  int tti_ = 0;
};

}  // namespace geobandit
