#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geobandit/agents.hpp"
#include "geobandit/channels.hpp"

namespace geobandit {

struct CampaignConfig {
  int schema_version = 1;
  std::string name = "campaign";
  std::string experiment = "exp1";  // exp1..exp4 | ris
  int horizon = 500;
  std::vector<std::uint64_t> seeds = {0};
  std::uint64_t campaign_seed = 271828;
  int last_n = 100;
  int curve_stride = 5;
  StaticChannelConfig static_channel;
  RisChannelConfig ris_channel;
  std::vector<AgentConfig> methods;
};

Manifold experiment_manifold(const std::string& experiment);

// Parse a JSON config file.  Method entries start from
// default_agent_config(method, manifold) and apply their overrides on top.
CampaignConfig load_campaign_config(const std::string& path);
CampaignConfig parse_campaign_config(const std::string& json_text);

struct CellResult {
  std::string method;
  std::uint64_t seed = 0;
  std::string status = "ok";  // or the error text
  std::vector<double> cum_regret;  // running cumulative regret per round
  double final_cum = 0;
  double last_n_mean = 0;  // mean instantaneous regret over the last N rounds
  bool oracle_violation = false;  // a tested config beat the oracle (ris)
};

struct MethodSummary {
  std::string method;
  int cells = 0;
  double mean_final = 0, se_final = 0;
  double mean_last_n = 0, se_last_n = 0;
};

struct CampaignResult {
  CampaignConfig config;
  std::vector<CellResult> cells;
  std::vector<MethodSummary> summary;
};

// One (method, seed) cell.  Deterministic: all randomness flows from
// (campaign_seed, method, seed) streams.
CellResult run_cell(const CampaignConfig& config, const AgentConfig& method,
                    std::uint64_t seed);

// Full grid; failed cells carry their error text in `status` instead of
// aborting the rest.  Fills the summary.
CampaignResult run_campaign(const CampaignConfig& config, int workers = 1);

void summarize(CampaignResult& result);

// summary.csv, curves.csv (decimated), campaign.json into out_dir.
void write_outputs(const CampaignResult& result, const std::string& out_dir);

// Reload per-cell scalars (not curves) from campaign.json for paired tests.
CampaignResult load_campaign(const std::string& dir);

// Per-seed metric series for one method, ordered by seed; metric is "final"
// or "last_n".  Throws if any matching cell failed.
std::vector<double> method_metric(const CampaignResult& result,
                                  const std::string& method,
                                  const std::string& metric);

}  // namespace geobandit
