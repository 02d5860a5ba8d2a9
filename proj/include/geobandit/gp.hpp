#pragma once

#include <Eigen/Dense>

#include <deque>
#include <utility>
#include <vector>

#include "geobandit/kernels.hpp"

namespace geobandit {

struct Observation {
  ManifoldPoint point;
  double reward = 0;
};

// Sliding observation window; push beyond capacity evicts the oldest entry.
class ObservationBuffer {
 public:
  explicit ObservationBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ == 0) throw ContractError("observation buffer: zero capacity");
  }

  void push(Observation obs) {
    entries_.push_back(std::move(obs));
    while (entries_.size() > capacity_) entries_.pop_front();
  }

  // Keep only the most recent n entries and lower the capacity to n.
  void truncate_to(std::size_t n) {
    if (n == 0) throw ContractError("observation buffer: zero capacity");
    capacity_ = n;
    while (entries_.size() > capacity_) entries_.pop_front();
  }

  void set_capacity(std::size_t n) {
    if (n == 0) throw ContractError("observation buffer: zero capacity");
    capacity_ = n;
    while (entries_.size() > capacity_) entries_.pop_front();
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  // Index 0 is the oldest retained entry.
  const Observation& operator[](std::size_t i) const { return entries_[i]; }

  // The most recent n entries, oldest first.
  std::vector<Observation> last(std::size_t n) const {
    const std::size_t take = std::min(n, entries_.size());
    return {entries_.end() - static_cast<std::ptrdiff_t>(take), entries_.end()};
  }

 private:
  std::deque<Observation> entries_;
  std::size_t capacity_;
};

// Fitted posterior state.  The kernel is borrowed, not owned; the owner (an
// agent or a test) must outlive the state.
struct GPState {
  const Kernel* kernel = nullptr;
  double noise_variance = 0;
  std::vector<ManifoldPoint> inputs;
  Eigen::VectorXd targets;
  Eigen::MatrixXd chol_lower;   // L with L L^T = K + sigma_n^2 I + jitter I
  Eigen::VectorXd alpha;        // (K + sigma_n^2 I)^-1 y
  double applied_jitter = 0;    // 0 when the plain factorization succeeded

  std::size_t size() const { return inputs.size(); }
};

// Full refit (no incremental factor updates): assembles the Gram matrix and
// factorizes A = K + sigma_n^2 I, escalating jitter 1e-10..1e-6 by tens when
// the factorization fails; SingularModelError after the ladder is exhausted.
GPState fit(const Kernel& kernel, const std::vector<Observation>& window,
            double noise_variance);

// Same contract with a caller-maintained Gram matrix of the window points
// (K must equal gram_matrix(kernel, points of window)).
GPState fit_with_gram(const Kernel& kernel, const std::vector<ManifoldPoint>& pts,
                      const Eigen::VectorXd& y, const Eigen::MatrixXd& K,
                      double noise_variance);

// Heteroscedastic variant: per-observation noise variances on the diagonal.
GPState fit_with_gram(const Kernel& kernel, const std::vector<ManifoldPoint>& pts,
                      const Eigen::VectorXd& y, const Eigen::MatrixXd& K,
                      const Eigen::VectorXd& noise_variances);

// Posterior mean and variance at a point; an empty state returns the prior
// (0, sigma_f2).  Variance is clamped at zero against roundoff.
std::pair<double, double> posterior(const GPState& state, const ManifoldPoint& p);

// Posterior over many points through one triangular block solve.
void posterior_block(const GPState& state, const std::vector<ManifoldPoint>& pts,
                     Eigen::VectorXd& means, Eigen::VectorXd& variances);

// Same, with the cross-covariance matrix already assembled (rows = training
// inputs, cols = query points).
void posterior_block_with_cross(const GPState& state, const Eigen::MatrixXd& cross,
                                const Eigen::VectorXd& prior_diag,
                                Eigen::VectorXd& means, Eigen::VectorXd& variances);

// Gaussian log marginal likelihood of the fitted window:
//   -1/2 y^T alpha - sum_i log L_ii - (n/2) log 2pi.
double log_marginal_likelihood(const GPState& state);
double log_marginal_likelihood(const Kernel& kernel,
                               const std::vector<Observation>& window,
                               double noise_variance);

// Scores each candidate window W (those with at least W entries available) by
// LML(last W)/W and returns the winner if it beats the current window's score
// by at least `hysteresis` nats; ties within 1e-12 go to the largest W.  When
// the current window cannot be scored it is kept unchanged.
int select_window(const Kernel& kernel, const ObservationBuffer& buffer,
                  const std::vector<int>& windows, int current_window,
                  double hysteresis, double noise_variance);

}  // namespace geobandit
