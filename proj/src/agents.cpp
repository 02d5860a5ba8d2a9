#include "geobandit/agents.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace geobandit {

namespace {

KernelFamily intrinsic_family(Manifold m) {
  switch (m) {
    case Manifold::Sphere: return KernelFamily::SphereSpectral;
    case Manifold::Torus: return KernelFamily::TorusSpectral;
    case Manifold::Rotation: return KernelFamily::So3Character;
    case Manifold::DiscreteTorus: return KernelFamily::CircleProduct;
  }
  throw ContractError("unknown manifold");
}

double intrinsic_default_lengthscale(Manifold m) {
  switch (m) {
    case Manifold::Sphere: return 0.35;
    case Manifold::Torus: return 1.0;
    case Manifold::Rotation: return kPi / 4;
    case Manifold::DiscreteTorus: return 3.0;
  }
  return 1.0;
}

Eigen::VectorXi random_config(int dims, int levels, Rng& rng) {
  Eigen::VectorXi c(dims);
  for (int m = 0; m < dims; ++m)
    c[m] = static_cast<int>(rng.uniform_int(levels));
  return c;
}

// Finite-arm confidence growth beta_t = 2 log(K pi^2 t^2 / 6), the union
// bound over K arms at level 1/t^2.  arm_count may exceed integer range
// (full configuration spaces); only its log matters.
double scheduled_beta(double arm_count, int t) {
  const double tt = static_cast<double>(t);
  return 2.0 * std::log(arm_count * kPi * kPi * tt * tt / 6.0);
}

void validate_beta_policy(const AgentConfig& cfg) {
  if (cfg.beta_policy != "constant" && cfg.beta_policy != "schedule" &&
      cfg.beta_policy != "decay")
    throw ConfigError(cfg.method + ": unknown beta_policy '" + cfg.beta_policy + "'");
}

// ---------------------------------------------------------------------------
// GP-UCB on a finite candidate set with continuous local refinement.  The
// Cholesky factor, the candidate cross-covariance and its triangular solve
// are all extended one row per round, so a round costs O(t^2 + t |C|)
// instead of a fresh O(t^3) factorization.

class CandidateGpUcbAgent : public Agent {
 public:
  CandidateGpUcbAgent(const AgentConfig& cfg, const ArmSpace& space, Rng rng)
      : cfg_(cfg), rng_(rng), kernel_(make_kernel(cfg, space)), cands_(space.candidates.points) {
    if (cands_.empty()) throw ConfigError(cfg.method + ": needs a candidate set");
    validate_beta_policy(cfg);
    const auto nc = static_cast<Eigen::Index>(cands_.size());
    cross_.resize(0, nc);
    v_.resize(0, nc);
    colsq_ = Eigen::VectorXd::Zero(nc);
    state_.kernel = &kernel_;
    state_.noise_variance = cfg.noise_variance;
    stats_.last_beta = cfg.beta;
  }

  ManifoldPoint select(int t) override {
    const auto n = static_cast<Eigen::Index>(state_.size());
    if (n == 0) return cands_[0];
    const auto nc = static_cast<Eigen::Index>(cands_.size());
    Eigen::VectorXd means = cross_.topRows(n).transpose() * state_.alpha;
    Eigen::VectorXd ucb(nc);
    const double sf2 = kernel_.variance();
    const double beta = beta_at(t);
    stats_.last_beta = beta;
    const double sqb = std::sqrt(beta);
    for (Eigen::Index j = 0; j < nc; ++j) {
      const double var = std::max(0.0, sf2 - colsq_[j]);
      ucb[j] = means[j] + sqb * std::sqrt(var);
    }
    // Top-k starts, then gradient refinement in the manifold.
    std::vector<int> order(nc);
    std::iota(order.begin(), order.end(), 0);
    const int k = std::min<int>(cfg_.refine_top_k, static_cast<int>(nc));
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](int a, int b) {
                        if (ucb[a] != ucb[b]) return ucb[a] > ucb[b];
                        return a < b;
                      });
    Objective obj = [&](const ManifoldPoint& p) {
      auto [mu, var] = posterior(state_, p);
      return mu + sqb * std::sqrt(var);
    };
    ManifoldPoint best = cands_[order[0]];
    double best_val = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
      ManifoldPoint refined = local_refine(obj, cands_[order[i]], cfg_.refine_sweeps);
      const double val = obj(refined);
      if (val > best_val) {
        best_val = val;
        best = refined;
      }
    }
    return best;
  }

  void update(int, const ManifoldPoint& arm, double reward) override {
    const auto n = static_cast<Eigen::Index>(state_.size());
    const auto nc = static_cast<Eigen::Index>(cands_.size());
    // Covariances against the history and the candidate set.
    Eigen::VectorXd knew(n);
    for (Eigen::Index i = 0; i < n; ++i) knew[i] = kernel_(state_.inputs[i], arm);
    Eigen::VectorXd crow(nc);
    for (Eigen::Index j = 0; j < nc; ++j) crow[j] = kernel_(arm, cands_[j]);

    state_.inputs.push_back(arm);
    state_.targets.conservativeResize(n + 1);
    state_.targets[n] = reward;
    grow(cross_, n + 1, nc);
    cross_.row(n) = crow;

    if (append_chol(knew)) {
      // New row of V = L^-1 cross.
      grow(v_, n + 1, nc);
      Eigen::RowVectorXd vrow = crow.transpose();
      if (n > 0) vrow -= state_.chol_lower.row(n).head(n) * v_.topRows(n);
      vrow /= state_.chol_lower(n, n);
      v_.row(n) = vrow;
      colsq_ += vrow.array().square().matrix().transpose();
      state_.alpha = state_.chol_lower.triangularView<Eigen::Lower>().solve(
          state_.targets);
      state_.chol_lower.triangularView<Eigen::Lower>().transpose().solveInPlace(
          state_.alpha);
    } else {
      refit_full();
    }
  }

  ManifoldPoint recommend() const override {
    const auto n = static_cast<Eigen::Index>(state_.size());
    if (n == 0) return cands_[0];
    Eigen::VectorXd means = cross_.topRows(n).transpose() * state_.alpha;
    Eigen::Index best = 0;
    means.maxCoeff(&best);
    return cands_[best];
  }

 private:
  static Kernel make_kernel(const AgentConfig& cfg, const ArmSpace& space) {
    KernelSpec spec = cfg.kernel;
    if (spec.family == KernelFamily::CircleProduct)
      return Kernel(spec, build_circle_table(space.levels, spec.nu, spec.lengthscale));
    return Kernel(spec);
  }

  double beta_at(int t) const {
    if (cfg_.beta_policy == "schedule")
      return scheduled_beta(static_cast<double>(cands_.size()), t);
    if (cfg_.beta_policy == "decay")
      return cfg_.beta0 +
             (cfg_.beta_reset - cfg_.beta0) * std::exp(-double(t) / cfg_.beta_tau);
    return cfg_.beta;
  }

  static void grow(Eigen::MatrixXd& m, Eigen::Index rows, Eigen::Index cols) {
    if (m.rows() >= rows) return;
    Eigen::Index cap = std::max<Eigen::Index>(16, m.rows());
    while (cap < rows) cap *= 2;
    m.conservativeResize(cap, cols);
  }

  // Extend L by one row for the bordered system; false when the pivot is lost
  // to roundoff and a full refit (with the jitter ladder) is needed.  The
  // factor stays exactly n x n so the generic posterior path can use it.
  bool append_chol(const Eigen::VectorXd& knew) {
    const auto n = static_cast<Eigen::Index>(knew.size());
    Eigen::VectorXd l(n);
    if (n > 0)
      l = state_.chol_lower.triangularView<Eigen::Lower>().solve(knew);
    const double diag = kernel_.variance() + state_.noise_variance +
                        state_.applied_jitter - l.squaredNorm();
    if (!(diag > kernel_.variance() * 1e-12)) return false;
    state_.chol_lower.conservativeResize(n + 1, n + 1);
    if (n > 0) {
      state_.chol_lower.row(n).head(n) = l.transpose();
      state_.chol_lower.col(n).head(n).setZero();
    }
    state_.chol_lower(n, n) = std::sqrt(diag);
    return true;
  }

  void refit_full() {
    const auto n = static_cast<Eigen::Index>(state_.size());
    Eigen::MatrixXd gram = gram_matrix(kernel_, state_.inputs);
    GPState fresh = fit_with_gram(kernel_, state_.inputs, state_.targets.head(n),
                                  gram, cfg_.noise_variance);
    state_.chol_lower = fresh.chol_lower;
    state_.alpha = fresh.alpha;
    state_.applied_jitter = fresh.applied_jitter;
    grow(v_, n, cross_.cols());
    v_.topRows(n) = cross_.topRows(n);
    state_.chol_lower.topLeftCorner(n, n)
        .triangularView<Eigen::Lower>()
        .solveInPlace(v_.topRows(n));
    colsq_ = v_.topRows(n).array().square().colwise().sum();
  }

  AgentConfig cfg_;
  Rng rng_;
  Kernel kernel_;
  std::vector<ManifoldPoint> cands_;
  GPState state_;
  Eigen::MatrixXd cross_;  // t x |C|
  Eigen::MatrixXd v_;      // L^-1 cross
  Eigen::VectorXd colsq_;  // squared column norms of V
};

// ---------------------------------------------------------------------------
// GP agent on the discrete configuration space (Z_B)^M: sliding window,
// warmup centering, greedy coordinate ascent on the UCB surface, variance /
// residual triggered exploration probes, and optional likelihood-driven
// window adaptation.  Covers the product-kernel surrogate, the
// squared-exponential surrogate on unwrapped phases, and the
// forgetting-factor variant (inflated noise on stale samples).

class ConfigurationGpAgent : public Agent {
 public:
  ConfigurationGpAgent(const AgentConfig& cfg, const ArmSpace& space, Rng rng)
      : cfg_(cfg), rng_(rng), dims_(space.dims), levels_(space.levels),
        kernel_(make_kernel(cfg, space)) {
    if (space.manifold != Manifold::DiscreteTorus || dims_ <= 0 || levels_ < 2)
      throw ConfigError(cfg.method + ": needs the discrete configuration space");
    validate_beta_policy(cfg);
    se_path_ = kernel_.spec().family == KernelFamily::EuclideanSe;
    if (!se_path_ && kernel_.spec().family != KernelFamily::CircleProduct)
      throw ConfigError(cfg.method + ": surrogate must be circle-product or euclidean-se");
    if (!se_path_) tab_ = kernel_.table().values;
    wgp_ = cfg.method == "wgp-ucb";
    lambda_ = cfg.forgetting > 0 ? cfg.forgetting : 1.0 - 1.0 / 150.0;
    w_eff_ = cfg_.window > 0 ? cfg_.window : 150;
    if (!cfg_.window_grid.empty())
      hist_cap_ = *std::max_element(cfg_.window_grid.begin(), cfg_.window_grid.end());
    else
      hist_cap_ = wgp_ ? cfg_.wgp_cap : w_eff_;
    if (wgp_) w_eff_ = hist_cap_;
    k_.resize(hist_cap_, hist_cap_);
    incumbent_ = Eigen::VectorXi::Zero(dims_);
    stats_.current_window = w_eff_;
    eta_ = cfg_.eta_sigma;
    if (!cfg_.window_grid.empty() && cfg_.eta_from_window) eta_ = eta_for(w_eff_);
    const double step = kTwoPi / levels_;
    unwrap_sq_.resize(levels_, levels_);
    for (int a = 0; a < levels_; ++a)
      for (int b = 0; b < levels_; ++b)
        unwrap_sq_(a, b) = (a - b) * step * ((a - b) * step);
  }

  ManifoldPoint select(int t) override {
    pending_valid_ = false;
    if (t <= cfg_.warmup || state_.size() == 0) {
      last_played_ = random_config(dims_, levels_, rng_);
      return make_discrete_torus_point(last_played_, levels_);
    }
    const double beta = beta_at(t);
    stats_.last_beta = beta;
    Eigen::VectorXi theta = ascend(incumbent_, beta);
    auto [mu, var] = point_posterior(theta);
    const bool var_fire = eta_ > 0 && var > eta_ * kernel_.variance();
    const bool z_fire = cfg_.zbar_threshold > 0 &&
                        static_cast<int>(z_hist_.size()) == cfg_.zbar_window &&
                        mean_of(z_hist_) > cfg_.zbar_threshold;
    if ((var_fire || z_fire) && t - last_reset_ >= cfg_.cooldown) {
      ++stats_.resets;
      stats_.reset_rounds.push_back(t);
      last_reset_ = t;
      beta_reset_round_ = t;
      theta = random_config(dims_, levels_, rng_);
      std::tie(mu, var) = point_posterior(theta);
    }
    pending_mu_ = mu;
    pending_var_ = var;
    pending_valid_ = true;
    last_played_ = theta;
    return make_discrete_torus_point(theta, levels_);
  }

  void update(int t, const ManifoldPoint& arm, double reward) override {
    const auto& cfg_pt = std::get<DiscreteTorusPoint>(arm);
    push(cfg_pt.theta, reward);
    if (t < cfg_.warmup) return;
    if (t == cfg_.warmup) {
      // Center rewards on the warmup mean and seed the incumbent with the
      // best probe so far.
      double acc = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < ys_.size(); ++i) {
        acc += ys_[i];
        if (ys_[i] > best) {
          best = ys_[i];
          incumbent_ = cfgs_[i];
        }
      }
      offset_ = acc / static_cast<double>(ys_.size());
      stats_.reward_offset = offset_;
      refit();
      return;
    }
    if (pending_valid_ && cfg_.zbar_threshold > 0) {
      const double z = std::abs((reward - offset_) - pending_mu_) /
                       std::sqrt(pending_var_ + cfg_.noise_variance);
      z_hist_.push_back(z);
      while (static_cast<int>(z_hist_.size()) > cfg_.zbar_window) z_hist_.pop_front();
    }
    incumbent_ = cfg_pt.theta;
    if (!cfg_.window_grid.empty() && cfg_.window_period > 0 &&
        t % cfg_.window_period == 0) {
      ObservationBuffer buf(cfgs_.size());
      for (std::size_t i = 0; i < cfgs_.size(); ++i)
        buf.push({make_discrete_torus_point(cfgs_[i], levels_), ys_[i] - offset_});
      const int chosen = select_window(kernel_, buf, cfg_.window_grid, w_eff_,
                                       cfg_.hysteresis, cfg_.noise_variance);
      if (chosen != w_eff_) {
        w_eff_ = chosen;
        ++stats_.window_switches;
        stats_.window_switch_rounds.push_back(t);
        stats_.current_window = w_eff_;
        if (cfg_.eta_from_window) eta_ = eta_for(w_eff_);
      }
    }
    refit();
  }

  ManifoldPoint recommend() const override {
    return make_discrete_torus_point(incumbent_, levels_);
  }

 private:
  static Kernel make_kernel(const AgentConfig& cfg, const ArmSpace& space) {
    KernelSpec spec = cfg.kernel;
    if (spec.family == KernelFamily::CircleProduct)
      return Kernel(spec, build_circle_table(space.levels, spec.nu, spec.lengthscale));
    return Kernel(spec);
  }

  static double mean_of(const std::deque<double>& d) {
    double acc = 0;
    for (double v : d) acc += v;
    return d.empty() ? 0 : acc / static_cast<double>(d.size());
  }

  static double eta_for(int window) {
    switch (window) {
      case 80: return 0.6;
      case 150: return 0.8;
      case 250: return 0.85;
      case 400: return 0.9;
      default: return 0.8;
    }
  }

  double beta_at(int t) const {
    if (cfg_.beta_policy == "constant") return cfg_.beta;
    if (cfg_.beta_policy == "schedule")
      return scheduled_beta(std::pow(double(levels_), double(dims_)), t);
    const double dt = static_cast<double>(t - beta_reset_round_);
    return cfg_.beta0 + (cfg_.beta_reset - cfg_.beta0) * std::exp(-dt / cfg_.beta_tau);
  }

  double kernel_pair(const Eigen::VectorXi& a, const Eigen::VectorXi& b) const {
    if (se_path_) {
      double d2 = 0;
      for (int m = 0; m < dims_; ++m) d2 += unwrap_sq_(a[m], b[m]);
      const double l2 = kernel_.spec().lengthscale * kernel_.spec().lengthscale;
      return kernel_.variance() * std::exp(-0.5 * d2 / l2);
    }
    double prod = 1;
    for (int m = 0; m < dims_; ++m) {
      int d = a[m] - b[m];
      if (d < 0) d += levels_;
      prod *= tab_[d];
    }
    return kernel_.variance() * prod;
  }

  void push(const Eigen::VectorXi& c, double y) {
    if (static_cast<int>(cfgs_.size()) == hist_cap_) {
      cfgs_.pop_front();
      ys_.pop_front();
      times_.pop_front();
      const int n = hist_cap_;
      k_.topLeftCorner(n - 1, n - 1) = k_.block(1, 1, n - 1, n - 1).eval();
    }
    const auto n = static_cast<Eigen::Index>(cfgs_.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = kernel_pair(cfgs_[i], c);
      k_(i, n) = v;
      k_(n, i) = v;
    }
    k_(n, n) = kernel_.variance();
    cfgs_.push_back(c);
    ys_.push_back(y);
    times_.push_back(round_counter_++);
  }

  void refit() {
    const int n = static_cast<int>(cfgs_.size());
    const int w = std::min(w_eff_, n);
    const int base = n - w;
    fit_pts_.clear();
    fit_pts_.reserve(w);
    Eigen::VectorXd y(w);
    for (int i = 0; i < w; ++i) {
      fit_pts_.push_back(make_discrete_torus_point(cfgs_[base + i], levels_));
      y[i] = ys_[base + i] - offset_;
    }
    const Eigen::MatrixXd kb = k_.block(base, base, w, w);
    if (wgp_) {
      Eigen::VectorXd noise(w);
      const long now = round_counter_ - 1;
      for (int i = 0; i < w; ++i) {
        const long age = now - times_[base + i];
        noise[i] = cfg_.noise_variance * std::pow(lambda_, -static_cast<double>(age));
      }
      state_ = fit_with_gram(kernel_, fit_pts_, y, kb, noise);
    } else {
      state_ = fit_with_gram(kernel_, fit_pts_, y, kb, cfg_.noise_variance);
    }
  }

  // Cross-covariance vector of the fit window against a configuration.
  Eigen::VectorXd cross_of(const Eigen::VectorXi& c) const {
    const int n = static_cast<int>(cfgs_.size());
    const int w = static_cast<int>(state_.size());
    const int base = n - w;
    Eigen::VectorXd k(w);
    for (int i = 0; i < w; ++i) k[i] = kernel_pair(cfgs_[base + i], c);
    return k;
  }

  std::pair<double, double> point_posterior(const Eigen::VectorXi& c) const {
    const int w = static_cast<int>(state_.size());
    if (w == 0) return {0.0, kernel_.variance()};
    Eigen::VectorXd k = cross_of(c);
    const double mu = k.dot(state_.alpha);
    state_.chol_lower.triangularView<Eigen::Lower>().solveInPlace(k);
    return {mu, std::max(0.0, kernel_.variance() - k.squaredNorm())};
  }

  // One-coordinate-at-a-time exhaustive ascent on mu + sqrt(beta) sigma.
  // Prefix/suffix products (or running squared distances) make a candidate
  // cross-vector O(1) per window entry.
  Eigen::VectorXi ascend(const Eigen::VectorXi& start, double beta) {
    const int w = static_cast<int>(state_.size());
    const int B = levels_;
    const int n_hist = static_cast<int>(cfgs_.size());
    const int base = n_hist - w;
    const double sf2 = kernel_.variance();
    const double sqb = std::sqrt(beta);
    Eigen::VectorXi theta = start;
    Eigen::MatrixXd x(w, B);
    for (int sweep = 0; sweep < std::max(1, cfg_.ascent_sweeps); ++sweep) {
      if (se_path_) {
        Eigen::VectorXd d2(w);
        for (int i = 0; i < w; ++i) {
          double acc = 0;
          const auto& ci = cfgs_[base + i];
          for (int m = 0; m < dims_; ++m) acc += unwrap_sq_(theta[m], ci[m]);
          d2[i] = acc;
        }
        const double l2 = kernel_.spec().lengthscale * kernel_.spec().lengthscale;
        for (int m = 0; m < dims_; ++m) {
          for (int i = 0; i < w; ++i) {
            const auto& ci = cfgs_[base + i];
            const double rest = d2[i] - unwrap_sq_(theta[m], ci[m]);
            for (int b = 0; b < B; ++b)
              x(i, b) = sf2 * std::exp(-0.5 * (rest + unwrap_sq_(b, ci[m])) / l2);
          }
          const int b_star = pick_level(x, beta, sqb, sf2);
          for (int i = 0; i < w; ++i) {
            const auto& ci = cfgs_[base + i];
            d2[i] += unwrap_sq_(b_star, ci[m]) - unwrap_sq_(theta[m], ci[m]);
          }
          theta[m] = b_star;
        }
      } else {
        // suffix[i][m] = prod_{a >= m} tab[theta_a - c_ia]; left holds the
        // prefix over already-updated coordinates.
        Eigen::MatrixXd suffix(w, dims_ + 1);
        Eigen::VectorXd left = Eigen::VectorXd::Ones(w);
        for (int i = 0; i < w; ++i) {
          suffix(i, dims_) = 1;
          const auto& ci = cfgs_[base + i];
          for (int m = dims_ - 1; m >= 0; --m) {
            int d = theta[m] - ci[m];
            if (d < 0) d += B;
            suffix(i, m) = suffix(i, m + 1) * tab_[d];
          }
        }
        for (int m = 0; m < dims_; ++m) {
          for (int i = 0; i < w; ++i) {
            const auto& ci = cfgs_[base + i];
            const double baseval = sf2 * left[i] * suffix(i, m + 1);
            for (int b = 0; b < B; ++b) {
              int d = b - ci[m];
              if (d < 0) d += B;
              x(i, b) = baseval * tab_[d];
            }
          }
          const int b_star = pick_level(x, beta, sqb, sf2);
          for (int i = 0; i < w; ++i) {
            const auto& ci = cfgs_[base + i];
            int d = b_star - ci[m];
            if (d < 0) d += B;
            left[i] *= tab_[d];
          }
          theta[m] = b_star;
        }
      }
    }
    return theta;
  }

  int pick_level(Eigen::MatrixXd& x, double, double sqb, double sf2) const {
    Eigen::VectorXd means = x.transpose() * state_.alpha;
    state_.chol_lower.triangularView<Eigen::Lower>().solveInPlace(x);
    int best_b = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int b = 0; b < x.cols(); ++b) {
      const double var = std::max(0.0, sf2 - x.col(b).squaredNorm());
      const double val = means[b] + sqb * std::sqrt(var);
      if (val > best_val) {
        best_val = val;
        best_b = b;
      }
    }
    return best_b;
  }

  AgentConfig cfg_;
  Rng rng_;
  int dims_, levels_;
  Kernel kernel_;
  bool se_path_ = false;
  bool wgp_ = false;
  double lambda_ = 1;
  Eigen::VectorXd tab_;
  Eigen::MatrixXd unwrap_sq_;

  std::deque<Eigen::VectorXi> cfgs_;
  std::deque<double> ys_;
  std::deque<long> times_;
  long round_counter_ = 0;
  Eigen::MatrixXd k_;
  std::vector<ManifoldPoint> fit_pts_;
  GPState state_;

  Eigen::VectorXi incumbent_, last_played_;
  double offset_ = 0;
  int w_eff_ = 150, hist_cap_ = 150;
  double eta_ = 0;
  long last_reset_ = -1000000000;
  int beta_reset_round_ = 0;
  std::deque<double> z_hist_;
  bool pending_valid_ = false;
  double pending_mu_ = 0, pending_var_ = 0;
};

// ---------------------------------------------------------------------------
// Candidate-set baselines.

class Ucb1Agent : public Agent {
 public:
  Ucb1Agent(const AgentConfig&, const ArmSpace& space)
      : cands_(space.candidates.points) {
    if (cands_.empty()) throw ConfigError("ucb1: needs a candidate set");
    sums_ = Eigen::VectorXd::Zero(cands_.size());
    counts_ = Eigen::VectorXd::Zero(cands_.size());
  }

  ManifoldPoint select(int t) override {
    for (std::size_t i = 0; i < cands_.size(); ++i)
      if (counts_[i] == 0) return pick(i);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < cands_.size(); ++i) {
      const double v = sums_[i] / counts_[i] +
                       std::sqrt(2.0 * std::log(static_cast<double>(t)) / counts_[i]);
      if (v > best) {
        best = v;
        best_i = i;
      }
    }
    return pick(best_i);
  }

  void update(int, const ManifoldPoint&, double reward) override {
    sums_[last_] += reward;
    counts_[last_] += 1;
  }

  ManifoldPoint recommend() const override {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < cands_.size(); ++i)
      if (counts_[i] > 0 && sums_[i] / counts_[i] > best) {
        best = sums_[i] / counts_[i];
        best_i = i;
      }
    return cands_[best_i];
  }

 private:
  ManifoldPoint pick(std::size_t i) {
    last_ = i;
    return cands_[i];
  }
  std::vector<ManifoldPoint> cands_;
  Eigen::VectorXd sums_, counts_;
  std::size_t last_ = 0;
};

class ThompsonAgent : public Agent {
 public:
  ThompsonAgent(const AgentConfig& cfg, const ArmSpace& space, Rng rng)
      : cfg_(cfg), rng_(rng), cands_(space.candidates.points) {
    if (cands_.empty()) throw ConfigError("thompson: needs a candidate set");
    sums_ = Eigen::VectorXd::Zero(cands_.size());
    counts_ = Eigen::VectorXd::Zero(cands_.size());
  }

  ManifoldPoint select(int) override {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < cands_.size(); ++i) {
      const double pv = cfg_.thompson_prior_var;
      const double var = 1.0 / (1.0 / pv + counts_[i] / cfg_.noise_variance);
      const double mean = var * (sums_[i] / cfg_.noise_variance);
      const double draw = mean + std::sqrt(var) * rng_.normal();
      if (draw > best) {
        best = draw;
        best_i = i;
      }
    }
    last_ = best_i;
    return cands_[best_i];
  }

  void update(int, const ManifoldPoint&, double reward) override {
    sums_[last_] += reward;
    counts_[last_] += 1;
  }

  ManifoldPoint recommend() const override {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < cands_.size(); ++i) {
      const double pv = cfg_.thompson_prior_var;
      const double var = 1.0 / (1.0 / pv + counts_[i] / cfg_.noise_variance);
      const double mean = var * (sums_[i] / cfg_.noise_variance);
      if (mean > best) {
        best = mean;
        best_i = i;
      }
    }
    return cands_[best_i];
  }

 private:
  AgentConfig cfg_;
  Rng rng_;
  std::vector<ManifoldPoint> cands_;
  Eigen::VectorXd sums_, counts_;
  std::size_t last_ = 0;
};

// Hierarchical cover tree over the candidate set, split by the farthest pair
// of each cell; B-values maintained along the traversed path.
class HooAgent : public Agent {
 public:
  HooAgent(const AgentConfig& cfg, const ArmSpace& space)
      : cfg_(cfg), cands_(space.candidates.points) {
    if (cands_.empty()) throw ConfigError("hoo: needs a candidate set");
    const int d = tangent_dimension(cands_[0]);
    rho_ = cfg.hoo_rho > 0 ? cfg.hoo_rho : std::pow(2.0, -1.0 / d);
    std::vector<int> all(cands_.size());
    std::iota(all.begin(), all.end(), 0);
    nodes_.push_back(Node{std::move(all), 0, 0, -1, -1, 0, 0});
  }

  ManifoldPoint select(int t) override {
    path_.clear();
    int cur = 0;
    for (;;) {
      path_.push_back(cur);
      Node& node = nodes_[cur];
      if (node.left < 0) {
        if (node.count > 0 && node.members.size() > 1) {
          split(cur);
        } else {
          break;
        }
      }
      Node& again = nodes_[cur];
      if (again.left < 0) break;
      const double bl = bvalue(again.left, t);
      const double br = bvalue(again.right, t);
      cur = bl >= br ? again.left : again.right;
    }
    last_leaf_ = cur;
    return cands_[nodes_[cur].rep];
  }

  void update(int, const ManifoldPoint&, double reward) override {
    for (int idx : path_) {
      nodes_[idx].count += 1;
      nodes_[idx].sum += reward;
    }
  }

  ManifoldPoint recommend() const override {
    double best = -std::numeric_limits<double>::infinity();
    int best_rep = nodes_[0].rep;
    for (const Node& n : nodes_)
      if (n.count > 0 && n.sum / n.count > best) {
        best = n.sum / n.count;
        best_rep = n.rep;
      }
    return cands_[best_rep];
  }

 private:
  struct Node {
    std::vector<int> members;
    int rep = 0;
    int depth = 0;
    int left = -1, right = -1;
    double sum = 0;
    long count = 0;
  };

  double bvalue(int idx, int t) const {
    const Node& n = nodes_[idx];
    if (n.count == 0) return std::numeric_limits<double>::infinity();
    return n.sum / n.count +
           std::sqrt(2.0 * std::log(static_cast<double>(t)) / n.count) +
           cfg_.hoo_nu1 * std::pow(rho_, n.depth);
  }

  void split(int idx) {
    const std::vector<int> mem = nodes_[idx].members;
    // Farthest pair anchors the two children.
    int a = mem[0], b = mem[0];
    double far = -1;
    for (std::size_t i = 0; i < mem.size(); ++i)
      for (std::size_t j = i + 1; j < mem.size(); ++j) {
        const double d = geodesic_distance(cands_[mem[i]], cands_[mem[j]]);
        if (d > far) {
          far = d;
          a = mem[i];
          b = mem[j];
        }
      }
    std::vector<int> la, lb;
    for (int m : mem) {
      const double da = geodesic_distance(cands_[m], cands_[a]);
      const double db = geodesic_distance(cands_[m], cands_[b]);
      (da <= db ? la : lb).push_back(m);
    }
    const int depth = nodes_[idx].depth + 1;
    nodes_[idx].left = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{std::move(la), a, depth, -1, -1, 0, 0});
    nodes_[idx].right = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{std::move(lb), b, depth, -1, -1, 0, 0});
  }

  AgentConfig cfg_;
  std::vector<ManifoldPoint> cands_;
  double rho_ = 0.5;
  std::vector<Node> nodes_;
  std::vector<int> path_;
  int last_leaf_ = 0;
};

class RandomAgent : public Agent {
 public:
  RandomAgent(const ArmSpace& space, Rng rng) : space_(space), rng_(rng) {
    if (space.candidates.empty() &&
        (space.manifold != Manifold::DiscreteTorus || space.dims <= 0))
      throw ConfigError("random: needs candidates or a configuration space");
    last_ = space.candidates.empty()
                ? ManifoldPoint(make_discrete_torus_point(
                      Eigen::VectorXi::Zero(space.dims), space.levels))
                : space.candidates.points[0];
  }

  ManifoldPoint select(int) override {
    if (!space_.candidates.empty()) {
      last_ = space_.candidates
                  .points[static_cast<std::size_t>(rng_.uniform_int(
                      static_cast<std::int64_t>(space_.candidates.size())))];
    } else {
      last_ = make_discrete_torus_point(
          random_config(space_.dims, space_.levels, rng_), space_.levels);
    }
    return last_;
  }

  void update(int, const ManifoldPoint&, double) override {}
  ManifoldPoint recommend() const override { return last_; }

 private:
  ArmSpace space_;
  Rng rng_;
  ManifoldPoint last_;
};

// ---------------------------------------------------------------------------
// Configuration-space baselines.

class CeAgent : public Agent {
 public:
  CeAgent(const AgentConfig& cfg, const ArmSpace& space, Rng rng)
      : cfg_(cfg), rng_(rng), dims_(space.dims), levels_(space.levels) {
    p_ = Eigen::MatrixXd::Constant(dims_, levels_, 1.0 / levels_);
  }

  ManifoldPoint select(int) override {
    Eigen::VectorXi c(dims_);
    for (int m = 0; m < dims_; ++m) {
      const double u = rng_.uniform();
      double acc = 0;
      int chosen = levels_ - 1;
      for (int b = 0; b < levels_; ++b) {
        acc += p_(m, b);
        if (u < acc) {
          chosen = b;
          break;
        }
      }
      c[m] = chosen;
    }
    last_ = c;
    return make_discrete_torus_point(c, levels_);
  }

  void update(int, const ManifoldPoint& arm, double reward) override {
    batch_cfg_.push_back(std::get<DiscreteTorusPoint>(arm).theta);
    batch_y_.push_back(reward);
    if (static_cast<int>(batch_y_.size()) < cfg_.ce_batch) return;
    const int elite =
        std::max(1, static_cast<int>(std::ceil(cfg_.ce_elite * cfg_.ce_batch)));
    std::vector<int> order(batch_y_.size());
    std::iota(order.begin(), order.end(), 0);
    std::partial_sort(order.begin(), order.begin() + elite, order.end(),
                      [&](int a, int b) { return batch_y_[a] > batch_y_[b]; });
    Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(dims_, levels_);
    for (int e = 0; e < elite; ++e)
      for (int m = 0; m < dims_; ++m) freq(m, batch_cfg_[order[e]][m]) += 1.0 / elite;
    p_ = cfg_.ce_smoothing * p_ + (1.0 - cfg_.ce_smoothing) * freq;
    batch_cfg_.clear();
    batch_y_.clear();
  }

  ManifoldPoint recommend() const override {
    Eigen::VectorXi c(dims_);
    for (int m = 0; m < dims_; ++m) {
      Eigen::Index b;
      p_.row(m).maxCoeff(&b);
      c[m] = static_cast<int>(b);
    }
    return make_discrete_torus_point(c, levels_);
  }

 private:
  AgentConfig cfg_;
  Rng rng_;
  int dims_, levels_;
  Eigen::MatrixXd p_;
  std::vector<Eigen::VectorXi> batch_cfg_;
  std::vector<double> batch_y_;
  Eigen::VectorXi last_;
};

// Conditional sample-mean control: per-element reward means conditioned on
// the element's level over a sliding window; epsilon-greedy (csm) or a
// count-based bonus with forced coverage (ecsm).
class CsmAgent : public Agent {
 public:
  CsmAgent(const AgentConfig& cfg, const ArmSpace& space, Rng rng, bool bonus)
      : cfg_(cfg), rng_(rng), dims_(space.dims), levels_(space.levels), bonus_(bonus) {
    sums_ = Eigen::MatrixXd::Zero(dims_, levels_);
    counts_ = Eigen::MatrixXd::Zero(dims_, levels_);
  }

  ManifoldPoint select(int) override {
    Eigen::VectorXi c(dims_);
    const double nw = static_cast<double>(win_.size());
    for (int m = 0; m < dims_; ++m) {
      if (!bonus_ && rng_.uniform() < cfg_.epsilon) {
        c[m] = static_cast<int>(rng_.uniform_int(levels_));
        continue;
      }
      double best = -std::numeric_limits<double>::infinity();
      int best_b = 0;
      bool any = false;
      for (int b = 0; b < levels_; ++b) {
        double v;
        if (counts_(m, b) == 0) {
          if (!bonus_) continue;
          v = std::numeric_limits<double>::infinity();
        } else {
          v = sums_(m, b) / counts_(m, b);
          if (bonus_)
            v += cfg_.ecsm_c *
                 std::sqrt(2.0 * std::log(std::max(nw, 2.0)) / counts_(m, b));
        }
        if (v > best) {
          best = v;
          best_b = b;
          any = true;
        }
      }
      c[m] = any ? best_b : static_cast<int>(rng_.uniform_int(levels_));
    }
    last_ = c;
    return make_discrete_torus_point(c, levels_);
  }

  void update(int, const ManifoldPoint& arm, double reward) override {
    const Eigen::VectorXi& c = std::get<DiscreteTorusPoint>(arm).theta;
    win_.push_back({c, reward});
    for (int m = 0; m < dims_; ++m) {
      sums_(m, c[m]) += reward;
      counts_(m, c[m]) += 1;
    }
    while (static_cast<int>(win_.size()) > cfg_.csm_window) {
      const auto& old = win_.front();
      for (int m = 0; m < dims_; ++m) {
        sums_(m, old.first[m]) -= old.second;
        counts_(m, old.first[m]) -= 1;
      }
      win_.pop_front();
    }
  }

  ManifoldPoint recommend() const override {
    Eigen::VectorXi c(dims_);
    for (int m = 0; m < dims_; ++m) {
      double best = -std::numeric_limits<double>::infinity();
      int best_b = 0;
      for (int b = 0; b < levels_; ++b)
        if (counts_(m, b) > 0 && sums_(m, b) / counts_(m, b) > best) {
          best = sums_(m, b) / counts_(m, b);
          best_b = b;
        }
      c[m] = best_b;
    }
    return make_discrete_torus_point(c, levels_);
  }

 private:
  AgentConfig cfg_;
  Rng rng_;
  int dims_, levels_;
  bool bonus_;
  Eigen::MatrixXd sums_, counts_;
  std::deque<std::pair<Eigen::VectorXi, double>> win_;
  Eigen::VectorXi last_;
};

// Single-element-flip simulated annealing with a geometric temperature
// schedule and a restart that re-heats when the observed reward collapses
// below the recent best.
class RisaAgent : public Agent {
 public:
  RisaAgent(const AgentConfig& cfg, const ArmSpace& space, Rng rng)
      : cfg_(cfg), rng_(rng), dims_(space.dims), levels_(space.levels) {
    cur_ = random_config(dims_, levels_, rng_);
    cur_y_ = -std::numeric_limits<double>::infinity();
  }

  ManifoldPoint select(int t) override {
    if (t == 1) {
      proposal_ = cur_;
    } else {
      proposal_ = cur_;
      const int m = static_cast<int>(rng_.uniform_int(dims_));
      int b = static_cast<int>(rng_.uniform_int(levels_ - 1));
      if (b >= cur_[m]) ++b;  // a different level, uniformly
      proposal_[m] = b;
    }
    return make_discrete_torus_point(proposal_, levels_);
  }

  void update(int t, const ManifoldPoint&, double reward) override {
    const double temp =
        cfg_.risa_t0 * std::pow(cfg_.risa_alpha, static_cast<double>(t - reheat_round_));
    if (reward >= cur_y_ ||
        rng_.uniform() < std::exp((reward - cur_y_) / std::max(temp, 1e-12))) {
      cur_ = proposal_;
      cur_y_ = reward;
    }
    recent_.push_back(reward);
    while (static_cast<int>(recent_.size()) > cfg_.risa_memory) recent_.pop_front();
    const double recent_best = *std::max_element(recent_.begin(), recent_.end());
    if (reward < recent_best - cfg_.risa_drop_db) reheat_round_ = t;
  }

  ManifoldPoint recommend() const override {
    return make_discrete_torus_point(cur_, levels_);
  }

 private:
  AgentConfig cfg_;
  Rng rng_;
  int dims_, levels_;
  Eigen::VectorXi cur_, proposal_;
  double cur_y_;
  std::deque<double> recent_;
  int reheat_round_ = 0;
};

}  // namespace

// ---------------------------------------------------------------------------

AgentConfig default_agent_config(const std::string& method, Manifold manifold) {
  AgentConfig c;
  c.method = method;
  c.name = method;
  const bool ris = manifold == Manifold::DiscreteTorus;
  c.noise_variance = ris ? 1.0 : 0.15;
  c.kernel.sigma_f2 = ris ? 25.0 : 225.0;
  c.kernel.nu = 2.5;
  c.kernel.lengthscale = intrinsic_default_lengthscale(manifold);
  if (method == "gp-intrinsic" || method == "intrinsic-gp" ||
      method == "adaptive-gp-v2") {
    c.kernel.family = intrinsic_family(manifold);
  } else if (method == "gp-euclidean") {
    c.kernel.family = KernelFamily::EuclideanMatern;
  } else if (method == "remarkable") {
    c.kernel.family = KernelFamily::EuclideanSe;
    c.kernel.lengthscale = 1.5;
  } else if (method == "wgp-ucb") {
    c.kernel.family = KernelFamily::CircleProduct;
  }
  if (ris && (c.kernel.family == KernelFamily::CircleProduct)) {
    c.kernel.nu = 1.5;
    c.kernel.lengthscale = 3.0;
  }
  if (method == "intrinsic-gp" || method == "remarkable") {
    c.window = 150;
    c.warmup = 20;
    c.eta_sigma = 0.8;
    c.beta = 2.0;
  } else if (method == "wgp-ucb") {
    c.window = 0;
    c.warmup = 20;
    c.eta_sigma = 0;
  } else if (method == "adaptive-gp-v2") {
    c.window = 150;
    c.window_grid = {80, 150, 250, 400};
    c.window_period = 100;
    c.hysteresis = 0.05;
    c.warmup = 100;
    c.eta_sigma = 0.8;
    c.eta_from_window = true;
    c.zbar_threshold = 4.0;
    c.zbar_window = 50;
    c.cooldown = 120;
    c.beta_policy = "decay";
  }
  return c;
}

bool method_is_static(const std::string& m) {
  return m == "gp-intrinsic" || m == "gp-euclidean" || m == "ucb1" ||
         m == "thompson" || m == "hoo" || m == "random" || m == "oracle-replay";
}

bool method_is_configuration(const std::string& m) {
  return m == "intrinsic-gp" || m == "adaptive-gp-v2" || m == "remarkable" ||
         m == "wgp-ucb" || m == "ce" || m == "csm" || m == "ecsm" ||
         m == "risa" || m == "random" || m == "oracle-replay";
}

std::unique_ptr<Agent> make_agent(const AgentConfig& config, const ArmSpace& space,
                                  Rng rng) {
  const std::string& m = config.method;
  if (m == "oracle-replay")
    throw ConfigError("oracle-replay is resolved by the harness, not an agent");
  const bool config_space = space.candidates.empty();
  if (config_space && !method_is_configuration(m))
    throw ConfigError(m + ": not defined on the configuration space");
  if (!config_space && !method_is_static(m))
    throw ConfigError(m + ": not defined on a candidate set");
  if (m == "gp-intrinsic" || m == "gp-euclidean")
    return std::make_unique<CandidateGpUcbAgent>(config, space, rng);
  if (m == "intrinsic-gp" || m == "adaptive-gp-v2" || m == "remarkable" ||
      m == "wgp-ucb")
    return std::make_unique<ConfigurationGpAgent>(config, space, rng);
  if (m == "ucb1") return std::make_unique<Ucb1Agent>(config, space);
  if (m == "thompson") return std::make_unique<ThompsonAgent>(config, space, rng);
  if (m == "hoo") return std::make_unique<HooAgent>(config, space);
  if (m == "random") return std::make_unique<RandomAgent>(space, rng);
  if (m == "ce") return std::make_unique<CeAgent>(config, space, rng);
  if (m == "csm") return std::make_unique<CsmAgent>(config, space, rng, false);
  if (m == "ecsm") return std::make_unique<CsmAgent>(config, space, rng, true);
  if (m == "risa") return std::make_unique<RisaAgent>(config, space, rng);
  throw ConfigError("unknown method: " + m);
}

DiscreteTorusPoint coordinate_ascent_reference(const GPState& state,
                                               const DiscreteTorusPoint& start,
                                               double beta, int sweeps) {
  DiscreteTorusPoint cur = start;
  const double sqb = std::sqrt(beta);
  for (int s = 0; s < std::max(1, sweeps); ++s) {
    for (Eigen::Index m = 0; m < cur.theta.size(); ++m) {
      int best_b = 0;
      double best_val = -std::numeric_limits<double>::infinity();
      for (int b = 0; b < cur.levels; ++b) {
        DiscreteTorusPoint probe = cur;
        probe.theta[m] = b;
        auto [mu, var] = posterior(state, probe);
        const double val = mu + sqb * std::sqrt(var);
        if (val > best_val) {
          best_val = val;
          best_b = b;
        }
      }
      cur.theta[m] = best_b;
    }
  }
  return cur;
}

}  // namespace geobandit
