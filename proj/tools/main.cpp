// Command-line front end: run campaigns, summarize results, paired
// comparisons with Holm correction, channel dumps for inspection.
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "geobandit/harness.hpp"
#include "geobandit/stats.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            int seed_limit, const std::string& methods_csv, int workers) {
  geobandit::CampaignConfig config = geobandit::load_campaign_config(config_path);
  if (seed_limit > 0 && static_cast<int>(config.seeds.size()) > seed_limit)
    config.seeds.resize(seed_limit);
  if (!methods_csv.empty()) {
    const std::vector<std::string> keep = split_csv(methods_csv);
    std::vector<geobandit::AgentConfig> filtered;
    for (const auto& m : config.methods)
      if (std::find(keep.begin(), keep.end(), m.name) != keep.end())
        filtered.push_back(m);
    if (filtered.empty()) {
      std::cerr << "no configured method matches --methods\n";
      return 1;
    }
    config.methods = std::move(filtered);
  }
  const geobandit::CampaignResult result = geobandit::run_campaign(config, workers);
  geobandit::write_outputs(result, out_dir);
  int failed = 0;
  for (const auto& cell : result.cells) {
    if (cell.status != "ok") {
      ++failed;
      std::cerr << "cell " << cell.method << "/" << cell.seed << ": "
                << cell.status << "\n";
    }
  }
  std::cout << config.name << ": " << result.cells.size() - failed << "/"
            << result.cells.size() << " cells ok -> " << out_dir << "\n";
  return failed == 0 ? 0 : 2;
}

int cmd_summarize(const std::string& in_dir) {
  const geobandit::CampaignResult result = geobandit::load_campaign(in_dir);
  std::printf("%-16s %5s %14s %12s %14s %12s\n", "method", "cells", "final",
              "se", "last_n", "se");
  for (const auto& s : result.summary)
    std::printf("%-16s %5d %14.4f %12.4f %14.4f %12.4f\n", s.method.c_str(),
                s.cells, s.mean_final, s.se_final, s.mean_last_n, s.se_last_n);
  return 0;
}

struct Comparison {
  std::string label;
  geobandit::PairedT test;
};

int report_comparisons(std::vector<Comparison>& comps, double alpha) {
  std::vector<double> pvals;
  for (const auto& c : comps) pvals.push_back(c.test.p);
  const std::vector<bool> reject = geobandit::holm_reject(pvals, alpha);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto& c = comps[i];
    std::printf("%-40s diff=%12.4f t=%8.3f df=%3d p=%.6g %s\n", c.label.c_str(),
                c.test.mean_diff, c.test.t, c.test.df, c.test.p,
                reject[i] ? "reject" : "keep");
  }
  return 0;
}

int cmd_paired(const std::string& dirs_csv, const std::string& method,
               const std::string& method_b, const std::string& metric,
               double alpha) {
  const std::vector<std::string> dirs = split_csv(dirs_csv);
  if (dirs.empty()) {
    std::cerr << "--in needs at least one directory\n";
    return 1;
  }
  std::vector<geobandit::CampaignResult> campaigns;
  for (const auto& d : dirs) campaigns.push_back(geobandit::load_campaign(d));
  std::vector<Comparison> comps;
  if (!method_b.empty()) {
    // method vs method_b within each campaign
    for (std::size_t i = 0; i < campaigns.size(); ++i) {
      const auto a = geobandit::method_metric(campaigns[i], method, metric);
      const auto b = geobandit::method_metric(campaigns[i], method_b, metric);
      comps.push_back({campaigns[i].config.name + ": " + method + " vs " + method_b,
                       geobandit::paired_t(a, b)});
    }
  } else {
    if (campaigns.size() < 2) {
      std::cerr << "consecutive-campaign comparison needs at least two dirs\n";
      return 1;
    }
    for (std::size_t i = 0; i + 1 < campaigns.size(); ++i) {
      const auto a = geobandit::method_metric(campaigns[i], method, metric);
      const auto b = geobandit::method_metric(campaigns[i + 1], method, metric);
      comps.push_back({method + ": " + campaigns[i].config.name + " vs " +
                           campaigns[i + 1].config.name,
                       geobandit::paired_t(a, b)});
    }
  }
  return report_comparisons(comps, alpha);
}

int cmd_dump_channel(const std::string& config_path, std::uint64_t seed,
                     const std::string& method, const std::string& out_path) {
  const geobandit::CampaignConfig config =
      geobandit::load_campaign_config(config_path);
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    return 1;
  }
  char buf[64];
  geobandit::Rng chan_rng(config.campaign_seed, method, seed, "channel");
  if (config.experiment == "ris") {
    geobandit::RisChannel channel =
        geobandit::RisChannel::create(config.ris_channel, chan_rng);
    out << "t,oracle_rsrp_db\n";
    for (int t = 1; t <= config.horizon; ++t) {
      if (t > 1) channel.advance();
      std::snprintf(buf, sizeof buf, "%.17g", channel.oracle().rsrp_db);
      out << t << ',' << buf << '\n';
    }
  } else {
    geobandit::Rng aux =
        config.experiment == "exp2"
            ? geobandit::Rng(config.campaign_seed, "", 0, "exp2-calibration")
            : geobandit::Rng(config.campaign_seed, method, seed, "estimate");
    geobandit::StaticChannel channel =
        geobandit::StaticChannel::create(config.static_channel, chan_rng, aux);
    out << "index,expected_reward\n";
    const auto& pts = channel.candidates().points;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", channel.expected_reward(pts[i]));
      out << i << ',' << buf << '\n';
    }
  }
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geometry-aware bandit benchmark harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir, in_dirs, methods_csv;
  std::string method, method_b, metric = "final";
  int seed_limit = 0, workers = 1;
  double alpha = 0.05;
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "run a campaign from a config file");
  run->add_option("--config", config_path, "campaign config (json)")->required();
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seeds", seed_limit, "limit to the first N seeds");
  run->add_option("--methods", methods_csv, "comma-separated method names to keep");
  run->add_option("--workers", workers, "worker threads");

  CLI::App* summ = app.add_subcommand("summarize", "print a stored campaign summary");
  summ->add_option("--in", in_dirs, "campaign output directory")->required();

  CLI::App* paired = app.add_subcommand(
      "paired", "paired t-tests with Holm correction across campaigns");
  paired->add_option("--in", in_dirs, "comma-separated campaign directories")
      ->required();
  paired->add_option("--method", method, "method name")->required();
  paired->add_option("--method-b", method_b,
                     "second method (within-campaign comparison)");
  paired->add_option("--metric", metric, "final | last_n");
  paired->add_option("--alpha", alpha, "family-wise error rate");

  CLI::App* dump = app.add_subcommand("dump-channel",
                                      "write the channel objective to csv");
  dump->add_option("--config", config_path, "campaign config (json)")->required();
  dump->add_option("--seed", seed, "cell seed");
  dump->add_option("--method", method, "method id for the stream key");
  dump->add_option("--out", out_dir, "output csv path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, out_dir, seed_limit, methods_csv, workers);
    if (summ->parsed()) return cmd_summarize(in_dirs);
    if (paired->parsed()) {
      if (metric != "final" && metric != "last_n") {
        std::cerr << "--metric must be final or last_n\n";
        return 1;
      }
      return cmd_paired(in_dirs, method, method_b, metric, alpha);
    }
    if (dump->parsed()) return cmd_dump_channel(config_path, seed, method, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
