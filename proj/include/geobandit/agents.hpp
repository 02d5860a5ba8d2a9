#pragma once

#include <memory>
#include <string>
#include <vector>

#include "geobandit/gp.hpp"
#include "geobandit/rng.hpp"

namespace geobandit {

// Arm space handed to an agent: either a finite candidate set on a continuous
// manifold (beam-alignment experiments) or the full discrete configuration
// space (Z_B)^M (RIS phase control), in which case `candidates` is empty.
struct ArmSpace {
  Manifold manifold = Manifold::Sphere;
  CandidateSet candidates;
  int dims = 0;    // M, discrete torus only
  int levels = 0;  // B, discrete torus only
};

struct AgentConfig {
  std::string method;
  std::string name;  // reporting label; defaults to method

  // GP surrogate.
  KernelSpec kernel;
  double noise_variance = 0.15;
  int window = 0;  // sliding-window size; 0 = unbounded

  // Acquisition.
  std::string beta_policy = "constant";  // "constant" | "schedule" | "decay"
  double beta = 2.0;                     // constant policy
  double beta0 = 1.5;                    // decay policy floor
  double beta_reset = 4.0;               // decay policy peak after a reset
  double beta_tau = 100;                 // decay time constant, rounds

  // Continuous refinement (candidate-set GP agents).
  int refine_top_k = 4;
  int refine_sweeps = 1;

  // Discrete coordinate ascent.
  int ascent_sweeps = 1;

  // Exploration re-seeding.
  double eta_sigma = 0;      // variance trigger threshold factor; 0 disables
  double zbar_threshold = 0; // standardized-residual trigger; 0 disables
  int zbar_window = 50;
  int cooldown = 0;          // min rounds between re-seeds
  int warmup = 0;            // uniform-random rounds before the surrogate engages

  // Window adaptation.
  std::vector<int> window_grid;  // empty = fixed window
  int window_period = 100;       // re-evaluation cadence
  double hysteresis = 0.05;      // nats per sample
  bool eta_from_window = true;   // map eta_sigma from the active window

  // Baselines.
  double thompson_prior_var = 10.0;
  double hoo_nu1 = 1.0;
  double hoo_rho = 0;  // 0 = 2^(-1/d)
  double epsilon = 0.1;          // per-element exploration (csm)
  int csm_window = 800;
  double ecsm_c = 1.5;
  int ce_batch = 10;
  double ce_elite = 0.1;
  double ce_smoothing = 0.7;
  double risa_alpha = 0.9995;
  double risa_t0 = 5.0;
  double risa_drop_db = 5.0;
  int risa_memory = 200;
  double forgetting = 0;  // wgp discount; 0 = 1 - 1/150
  int wgp_cap = 300;
};

// Fully-populated defaults for a method on a manifold; config files start
// from this and override fields.
AgentConfig default_agent_config(const std::string& method, Manifold manifold);

struct AgentStats {
  int resets = 0;
  std::vector<int> reset_rounds;
  int window_switches = 0;
  std::vector<int> window_switch_rounds;
  int current_window = 0;
  double last_beta = 0;
  double reward_offset = 0;  // warmup-mean centering applied to GP targets
};

class Agent {
 public:
  virtual ~Agent() = default;
  // Rounds are 1-based; select(t) then update(t, ...) with the same t.
  virtual ManifoldPoint select(int t) = 0;
  virtual void update(int t, const ManifoldPoint& arm, double reward) = 0;
  virtual ManifoldPoint recommend() const = 0;
  virtual const AgentStats& stats() const { return stats_; }

 protected:
  AgentStats stats_;
};

// Throws ConfigError when the method does not fit the arm space.
std::unique_ptr<Agent> make_agent(const AgentConfig& config, const ArmSpace& space,
                                  Rng rng);

// Methods valid for a finite candidate set / for the discrete configuration
// space, respectively.
bool method_is_static(const std::string& method);
bool method_is_configuration(const std::string& method);

// Reference implementation of greedy per-coordinate ascent on the UCB
// surface, one coordinate at a time in index order, ties at the smallest
// level; used to pin down the agents' optimized path in tests.
DiscreteTorusPoint coordinate_ascent_reference(const GPState& state,
                                               const DiscreteTorusPoint& start,
                                               double beta, int sweeps);

}  // namespace geobandit
