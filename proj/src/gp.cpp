#include "geobandit/gp.hpp"

#include <cmath>

namespace geobandit {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

GPState factorize(const Kernel& kernel, std::vector<ManifoldPoint> pts,
                  Eigen::VectorXd y, const Eigen::MatrixXd& K,
                  const Eigen::VectorXd& noise_diag) {
  const Eigen::Index n = K.rows();
  Eigen::MatrixXd A = K;
  A.diagonal() += noise_diag;
  double jitter = 0;
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::MatrixXd B = A;
    if (jitter > 0) B.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() == Eigen::Success) {
      GPState st;
      st.kernel = &kernel;
      st.noise_variance = noise_diag.size() > 0 ? noise_diag[0] : 0;
      st.inputs = std::move(pts);
      st.targets = std::move(y);
      st.chol_lower = llt.matrixL();
      st.alpha = llt.solve(st.targets);
      st.applied_jitter = jitter;
      return st;
    }
    jitter = (jitter == 0) ? 1e-10 : jitter * 10.0;
  }
  (void)n;
  throw SingularModelError("gp fit: jitter ladder exhausted at 1e-6");
}

}  // namespace

GPState fit(const Kernel& kernel, const std::vector<Observation>& window,
            double noise_variance) {
  if (window.empty()) throw ContractError("gp fit: empty window");
  if (!(noise_variance > 0)) throw SpecError("gp fit: noise variance must be positive");
  std::vector<ManifoldPoint> pts;
  pts.reserve(window.size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(window.size()));
  for (std::size_t i = 0; i < window.size(); ++i) {
    pts.push_back(window[i].point);
    y[static_cast<Eigen::Index>(i)] = window[i].reward;
  }
  const Eigen::MatrixXd K = gram_matrix(kernel, pts);
  const Eigen::VectorXd noise =
      Eigen::VectorXd::Constant(K.rows(), noise_variance);
  return factorize(kernel, std::move(pts), std::move(y), K, noise);
}

GPState fit_with_gram(const Kernel& kernel, const std::vector<ManifoldPoint>& pts,
                      const Eigen::VectorXd& y, const Eigen::MatrixXd& K,
                      double noise_variance) {
  if (pts.empty()) throw ContractError("gp fit: empty window");
  if (!(noise_variance > 0)) throw SpecError("gp fit: noise variance must be positive");
  const Eigen::VectorXd noise =
      Eigen::VectorXd::Constant(K.rows(), noise_variance);
  return factorize(kernel, pts, y, K, noise);
}

GPState fit_with_gram(const Kernel& kernel, const std::vector<ManifoldPoint>& pts,
                      const Eigen::VectorXd& y, const Eigen::MatrixXd& K,
                      const Eigen::VectorXd& noise_variances) {
  if (pts.empty()) throw ContractError("gp fit: empty window");
  if (noise_variances.size() != K.rows())
    throw ContractError("gp fit: noise vector length mismatch");
  if (!(noise_variances.minCoeff() > 0))
    throw SpecError("gp fit: noise variances must be positive");
  return factorize(kernel, pts, y, K, noise_variances);
}

std::pair<double, double> posterior(const GPState& state, const ManifoldPoint& p) {
  const Kernel& k = *state.kernel;
  if (state.size() == 0) return {0.0, k.variance()};
  const Eigen::Index n = static_cast<Eigen::Index>(state.size());
  Eigen::VectorXd kt(n);
  for (Eigen::Index i = 0; i < n; ++i) kt[i] = k(state.inputs[i], p);
  const double mean = kt.dot(state.alpha);
  const Eigen::VectorXd v =
      state.chol_lower.triangularView<Eigen::Lower>().solve(kt);
  double var = k(p, p) - v.squaredNorm();
  if (var < 0) var = 0;
  return {mean, var};
}

void posterior_block_with_cross(const GPState& state, const Eigen::MatrixXd& cross,
                                const Eigen::VectorXd& prior_diag,
                                Eigen::VectorXd& means, Eigen::VectorXd& variances) {
  means.noalias() = cross.transpose() * state.alpha;
  const Eigen::MatrixXd V =
      state.chol_lower.triangularView<Eigen::Lower>().solve(cross);
  variances = prior_diag - V.colwise().squaredNorm().transpose();
  variances = variances.cwiseMax(0.0);
}

void posterior_block(const GPState& state, const std::vector<ManifoldPoint>& pts,
                     Eigen::VectorXd& means, Eigen::VectorXd& variances) {
  const Kernel& k = *state.kernel;
  const Eigen::Index m = static_cast<Eigen::Index>(pts.size());
  if (state.size() == 0) {
    means = Eigen::VectorXd::Zero(m);
    variances = Eigen::VectorXd::Constant(m, k.variance());
    return;
  }
  const Eigen::Index n = static_cast<Eigen::Index>(state.size());
  Eigen::MatrixXd cross(n, m);
  Eigen::VectorXd diag(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) cross(i, j) = k(state.inputs[i], pts[j]);
    diag[j] = k(pts[j], pts[j]);
  }
  posterior_block_with_cross(state, cross, diag, means, variances);
}

double log_marginal_likelihood(const GPState& state) {
  const Eigen::Index n = static_cast<Eigen::Index>(state.size());
  const double quad = state.targets.dot(state.alpha);
  const double logdet_half = state.chol_lower.diagonal().array().log().sum();
  return -0.5 * quad - logdet_half - 0.5 * n * kLog2Pi;
}

double log_marginal_likelihood(const Kernel& kernel,
                               const std::vector<Observation>& window,
                               double noise_variance) {
  return log_marginal_likelihood(fit(kernel, window, noise_variance));
}

int select_window(const Kernel& kernel, const ObservationBuffer& buffer,
                  const std::vector<int>& windows, int current_window,
                  double hysteresis, double noise_variance) {
  if (windows.empty()) throw ContractError("select_window: no candidate windows");
  const std::size_t avail = buffer.size();
  double best_score = 0;
  int best_w = -1;
  double current_score = 0;
  bool have_current = false;
  for (int w : windows) {
    if (w <= 0) throw ContractError("select_window: windows must be positive");
    if (static_cast<std::size_t>(w) > avail) continue;  // insufficient data: skipped
    const double score =
        log_marginal_likelihood(kernel, buffer.last(w), noise_variance) / w;
    if (w == current_window) {
      current_score = score;
      have_current = true;
    }
    // Ties within 1e-12 resolve to the larger window; candidates are not
    // assumed sorted, so both directions are handled.
    if (best_w < 0 || score > best_score + 1e-12 ||
        (score >= best_score - 1e-12 && w > best_w)) {
      best_score = score;
      best_w = w;
    }
  }
  if (best_w < 0 || !have_current) return current_window;
  if (best_w == current_window) return current_window;
  return best_score >= current_score + hysteresis ? best_w : current_window;
}

}  // namespace geobandit
