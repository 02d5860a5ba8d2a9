#include "geobandit/harness.hpp"

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "geobandit/stats.hpp"

namespace geobandit {

using nlohmann::json;

Manifold experiment_manifold(const std::string& experiment) {
  if (experiment == "exp1") return Manifold::Sphere;
  if (experiment == "exp2") return Manifold::Torus;
  if (experiment == "exp3") return Manifold::Rotation;
  if (experiment == "exp4") return Manifold::Torus;
  if (experiment == "ris") return Manifold::DiscreteTorus;
  throw ConfigError("unknown experiment: " + experiment);
}

namespace {

int experiment_index(const std::string& experiment) {
  if (experiment == "exp1") return 1;
  if (experiment == "exp2") return 2;
  if (experiment == "exp3") return 3;
  if (experiment == "exp4") return 4;
  return 0;  // ris
}

void apply_kernel_json(const json& j, KernelSpec& spec) {
  if (j.contains("family")) spec.family = kernel_family_from_name(j.at("family"));
  if (j.contains("nu")) spec.nu = j.at("nu");
  if (j.contains("lengthscale")) spec.lengthscale = j.at("lengthscale");
  if (j.contains("sigma_f2")) spec.sigma_f2 = j.at("sigma_f2");
  if (j.contains("truncation")) spec.truncation = j.at("truncation");
}

void apply_agent_json(const json& j, AgentConfig& c) {
  if (j.contains("name")) c.name = j.at("name");
  if (j.contains("kernel")) apply_kernel_json(j.at("kernel"), c.kernel);
  if (j.contains("noise_variance")) c.noise_variance = j.at("noise_variance");
  if (j.contains("window")) c.window = j.at("window");
  if (j.contains("beta_policy")) c.beta_policy = j.at("beta_policy");
  if (j.contains("beta")) c.beta = j.at("beta");
  if (j.contains("beta0")) c.beta0 = j.at("beta0");
  if (j.contains("beta_reset")) c.beta_reset = j.at("beta_reset");
  if (j.contains("beta_tau")) c.beta_tau = j.at("beta_tau");
  if (j.contains("refine_top_k")) c.refine_top_k = j.at("refine_top_k");
  if (j.contains("refine_sweeps")) c.refine_sweeps = j.at("refine_sweeps");
  if (j.contains("ascent_sweeps")) c.ascent_sweeps = j.at("ascent_sweeps");
  if (j.contains("eta_sigma")) c.eta_sigma = j.at("eta_sigma");
  if (j.contains("zbar_threshold")) c.zbar_threshold = j.at("zbar_threshold");
  if (j.contains("zbar_window")) c.zbar_window = j.at("zbar_window");
  if (j.contains("cooldown")) c.cooldown = j.at("cooldown");
  if (j.contains("warmup")) c.warmup = j.at("warmup");
  if (j.contains("window_grid")) c.window_grid = j.at("window_grid").get<std::vector<int>>();
  if (j.contains("window_period")) c.window_period = j.at("window_period");
  if (j.contains("hysteresis")) c.hysteresis = j.at("hysteresis");
  if (j.contains("eta_from_window")) c.eta_from_window = j.at("eta_from_window");
  if (j.contains("thompson_prior_var")) c.thompson_prior_var = j.at("thompson_prior_var");
  if (j.contains("hoo_nu1")) c.hoo_nu1 = j.at("hoo_nu1");
  if (j.contains("hoo_rho")) c.hoo_rho = j.at("hoo_rho");
  if (j.contains("epsilon")) c.epsilon = j.at("epsilon");
  if (j.contains("csm_window")) c.csm_window = j.at("csm_window");
  if (j.contains("ecsm_c")) c.ecsm_c = j.at("ecsm_c");
  if (j.contains("ce_batch")) c.ce_batch = j.at("ce_batch");
  if (j.contains("ce_elite")) c.ce_elite = j.at("ce_elite");
  if (j.contains("ce_smoothing")) c.ce_smoothing = j.at("ce_smoothing");
  if (j.contains("risa_alpha")) c.risa_alpha = j.at("risa_alpha");
  if (j.contains("risa_t0")) c.risa_t0 = j.at("risa_t0");
  if (j.contains("risa_drop_db")) c.risa_drop_db = j.at("risa_drop_db");
  if (j.contains("risa_memory")) c.risa_memory = j.at("risa_memory");
  if (j.contains("forgetting")) c.forgetting = j.at("forgetting");
  if (j.contains("wgp_cap")) c.wgp_cap = j.at("wgp_cap");
}

json kernel_to_json(const KernelSpec& s) {
  return json{{"family", kernel_family_name(s.family)},
              {"nu", s.nu},
              {"lengthscale", s.lengthscale},
              {"sigma_f2", s.sigma_f2},
              {"truncation", s.truncation}};
}

json agent_to_json(const AgentConfig& c) {
  json j;
  j["method"] = c.method;
  j["name"] = c.name;
  j["kernel"] = kernel_to_json(c.kernel);
  j["noise_variance"] = c.noise_variance;
  j["window"] = c.window;
  j["beta_policy"] = c.beta_policy;
  j["beta"] = c.beta;
  j["beta0"] = c.beta0;
  j["beta_reset"] = c.beta_reset;
  j["beta_tau"] = c.beta_tau;
  j["refine_top_k"] = c.refine_top_k;
  j["refine_sweeps"] = c.refine_sweeps;
  j["ascent_sweeps"] = c.ascent_sweeps;
  j["eta_sigma"] = c.eta_sigma;
  j["zbar_threshold"] = c.zbar_threshold;
  j["zbar_window"] = c.zbar_window;
  j["cooldown"] = c.cooldown;
  j["warmup"] = c.warmup;
  j["window_grid"] = c.window_grid;
  j["window_period"] = c.window_period;
  j["hysteresis"] = c.hysteresis;
  j["eta_from_window"] = c.eta_from_window;
  j["thompson_prior_var"] = c.thompson_prior_var;
  j["hoo_nu1"] = c.hoo_nu1;
  j["hoo_rho"] = c.hoo_rho;
  j["epsilon"] = c.epsilon;
  j["csm_window"] = c.csm_window;
  j["ecsm_c"] = c.ecsm_c;
  j["ce_batch"] = c.ce_batch;
  j["ce_elite"] = c.ce_elite;
  j["ce_smoothing"] = c.ce_smoothing;
  j["risa_alpha"] = c.risa_alpha;
  j["risa_t0"] = c.risa_t0;
  j["risa_drop_db"] = c.risa_drop_db;
  j["risa_memory"] = c.risa_memory;
  j["forgetting"] = c.forgetting;
  j["wgp_cap"] = c.wgp_cap;
  return j;
}

json static_channel_to_json(const StaticChannelConfig& c) {
  return json{{"clusters", c.clusters},
              {"rician_kappa", c.rician_kappa},
              {"rician_mean", c.rician_mean},
              {"snr_db", c.snr_db},
              {"noise_variance", c.noise_variance},
              {"probe_count", c.probe_count},
              {"mc_draws", c.mc_draws}};
}

json ris_channel_to_json(const RisChannelConfig& c) {
  return json{{"carrier_hz", c.carrier_hz},
              {"rows", c.rows},
              {"cols", c.cols},
              {"levels", c.levels},
              {"speed_kmh", c.speed_kmh},
              {"tti_s", c.tti_s},
              {"clusters", c.clusters},
              {"k_bs_ris_db", c.k_bs_ris_db},
              {"k_ris_ms_db", c.k_ris_ms_db},
              {"direct_excess_db", c.direct_excess_db},
              {"meas_noise_db", c.meas_noise_db}};
}

void apply_static_channel_json(const json& j, StaticChannelConfig& c) {
  if (j.contains("clusters")) c.clusters = j.at("clusters");
  if (j.contains("rician_kappa")) c.rician_kappa = j.at("rician_kappa");
  if (j.contains("rician_mean")) c.rician_mean = j.at("rician_mean");
  if (j.contains("snr_db")) c.snr_db = j.at("snr_db");
  if (j.contains("noise_variance")) c.noise_variance = j.at("noise_variance");
  if (j.contains("probe_count")) c.probe_count = j.at("probe_count");
  if (j.contains("mc_draws")) c.mc_draws = j.at("mc_draws");
}

void apply_ris_channel_json(const json& j, RisChannelConfig& c) {
  if (j.contains("carrier_hz")) c.carrier_hz = j.at("carrier_hz");
  if (j.contains("rows")) c.rows = j.at("rows");
  if (j.contains("cols")) c.cols = j.at("cols");
  if (j.contains("levels")) c.levels = j.at("levels");
  if (j.contains("speed_kmh")) c.speed_kmh = j.at("speed_kmh");
  if (j.contains("tti_s")) c.tti_s = j.at("tti_s");
  if (j.contains("clusters")) c.clusters = j.at("clusters");
  if (j.contains("k_bs_ris_db")) c.k_bs_ris_db = j.at("k_bs_ris_db");
  if (j.contains("k_ris_ms_db")) c.k_ris_ms_db = j.at("k_ris_ms_db");
  if (j.contains("direct_excess_db")) c.direct_excess_db = j.at("direct_excess_db");
  if (j.contains("meas_noise_db")) c.meas_noise_db = j.at("meas_noise_db");
}

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// json has no NaN literal; the writer emits null for NaN standard errors
// (fewer than two cells), so map null back on reload.
double json_number(const json& j, const char* key) {
  const json& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

CampaignConfig parse_campaign_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  CampaignConfig c;
  if (j.contains("schema_version")) c.schema_version = j.at("schema_version");
  if (c.schema_version != 1)
    throw ConfigError("unsupported schema_version");
  if (j.contains("name")) c.name = j.at("name");
  if (!j.contains("experiment")) throw ConfigError("config: missing experiment");
  c.experiment = j.at("experiment");
  const Manifold manifold = experiment_manifold(c.experiment);  // validates
  if (j.contains("horizon")) c.horizon = j.at("horizon");
  if (c.horizon < 1) throw ConfigError("config: horizon must be >= 1");
  if (j.contains("campaign_seed")) c.campaign_seed = j.at("campaign_seed");
  if (j.contains("last_n")) c.last_n = j.at("last_n");
  if (j.contains("curve_stride")) c.curve_stride = j.at("curve_stride");
  if (j.contains("seeds")) {
    c.seeds.clear();
    const json& s = j.at("seeds");
    if (s.is_array()) {
      for (const auto& v : s) c.seeds.push_back(v.get<std::uint64_t>());
    } else if (s.is_object()) {
      // {"first": a, "count": n}
      const std::uint64_t first = s.value("first", 0);
      const std::uint64_t count = s.at("count");
      for (std::uint64_t i = 0; i < count; ++i) c.seeds.push_back(first + i);
    } else {
      throw ConfigError("config: seeds must be an array or {first, count}");
    }
  }
  if (c.seeds.empty()) throw ConfigError("config: empty seed list");
  if (j.contains("channel")) {
    if (c.experiment == "ris")
      apply_ris_channel_json(j.at("channel"), c.ris_channel);
    else
      apply_static_channel_json(j.at("channel"), c.static_channel);
  }
  c.static_channel.experiment = experiment_index(c.experiment);
  if (!j.contains("methods")) throw ConfigError("config: missing methods");
  for (const auto& mj : j.at("methods")) {
    if (!mj.contains("method")) throw ConfigError("config: method entry without method");
    const std::string method = mj.at("method");
    if (c.experiment == "ris" ? !method_is_configuration(method)
                              : !method_is_static(method))
      throw ConfigError("config: method " + method + " does not fit " + c.experiment);
    AgentConfig a = default_agent_config(method, manifold);
    a.noise_variance = c.experiment == "ris" ? 1.0 : c.static_channel.noise_variance;
    apply_agent_json(mj, a);
    c.methods.push_back(std::move(a));
  }
  return c;
}

CampaignConfig load_campaign_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_campaign_config(ss.str());
}

CellResult run_cell(const CampaignConfig& config, const AgentConfig& method,
                    std::uint64_t seed) {
  CellResult cell;
  cell.method = method.name;
  cell.seed = seed;
  const int T = config.horizon;
  cell.cum_regret.reserve(T);
  double cum = 0;

  Rng chan_rng(config.campaign_seed, method.name, seed, "channel");
  const bool replay = method.method == "oracle-replay";

  if (config.experiment == "ris") {
    RisChannel channel = RisChannel::create(config.ris_channel, chan_rng);
    ArmSpace space;
    space.manifold = Manifold::DiscreteTorus;
    space.dims = channel.elements();
    space.levels = channel.levels();
    std::unique_ptr<Agent> agent;
    if (!replay)
      agent = make_agent(method, space,
                         Rng(config.campaign_seed, method.name, seed, "agent"));
    for (int t = 1; t <= T; ++t) {
      if (t > 1) channel.advance();
      const RisChannel::Oracle oracle = channel.oracle();
      ManifoldPoint arm = replay ? ManifoldPoint(oracle.config)
                                 : agent->select(t);
      const auto& theta = std::get<DiscreteTorusPoint>(arm);
      const double y = channel.rsrp_db(theta, chan_rng);
      if (agent) agent->update(t, arm, y);
      const double inst = oracle.rsrp_db - channel.noiseless_rsrp_db(theta);
      if (inst < -1e-9) cell.oracle_violation = true;
      cum += inst;
      cell.cum_regret.push_back(cum);
    }
  } else {
    Rng aux = config.experiment == "exp2"
                  ? Rng(config.campaign_seed, "", 0, "exp2-calibration")
                  : Rng(config.campaign_seed, method.name, seed, "estimate");
    StaticChannel channel =
        StaticChannel::create(config.static_channel, chan_rng, aux);
    ArmSpace space;
    space.manifold = experiment_manifold(config.experiment);
    space.candidates = channel.candidates();
    std::unique_ptr<Agent> agent;
    if (!replay)
      agent = make_agent(method, space,
                         Rng(config.campaign_seed, method.name, seed, "agent"));
    const double fstar = channel.best_value();
    for (int t = 1; t <= T; ++t) {
      ManifoldPoint arm = replay ? channel.best_arm() : agent->select(t);
      const double y = channel.draw_reward(arm, chan_rng);
      if (agent) agent->update(t, arm, y);
      const double inst = fstar - channel.expected_reward(arm);
      cum += inst;
      cell.cum_regret.push_back(cum);
    }
  }

  cell.final_cum = cell.cum_regret.back();
  const int n = std::min(config.last_n, T);
  const double before = T - n > 0 ? cell.cum_regret[T - n - 1] : 0.0;
  cell.last_n_mean = (cell.cum_regret[T - 1] - before) / n;
  return cell;
}

CampaignResult run_campaign(const CampaignConfig& config, int workers) {
  CampaignResult result;
  result.config = config;
  struct Job {
    const AgentConfig* method;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& m : config.methods)
    for (std::uint64_t s : config.seeds) jobs.push_back({&m, s});
  result.cells.resize(jobs.size());

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      CellResult& cell = result.cells[i];
      try {
        cell = run_cell(config, *jobs[i].method, jobs[i].seed);
      } catch (const std::exception& e) {
        cell.method = jobs[i].method->name;
        cell.seed = jobs[i].seed;
        cell.status = std::string("error: ") + e.what();
      }
    }
  };
  const int n_workers = std::max(1, workers);
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  summarize(result);
  return result;
}

void summarize(CampaignResult& result) {
  result.summary.clear();
  for (const auto& m : result.config.methods) {
    MethodSummary s;
    s.method = m.name;
    std::vector<double> finals, lasts;
    for (const auto& cell : result.cells) {
      if (cell.method != m.name || cell.status != "ok") continue;
      finals.push_back(cell.final_cum);
      lasts.push_back(cell.last_n_mean);
    }
    s.cells = static_cast<int>(finals.size());
    const MeanSe f = mean_se(finals);
    const MeanSe l = mean_se(lasts);
    s.mean_final = f.mean;
    s.se_final = f.se;
    s.mean_last_n = l.mean;
    s.se_last_n = l.se;
    result.summary.push_back(s);
  }
}

void write_outputs(const CampaignResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream out(out_dir + "/summary.csv");
    if (!out) throw IoError("cannot write summary.csv");
    out << "method,cells,mean_final_regret,se_final_regret,mean_last_n_regret,"
           "se_last_n_regret\n";
    for (const auto& s : result.summary) {
      out << s.method << ',' << s.cells << ',' << format17(s.mean_final) << ','
          << (s.cells < 2 ? "na" : format17(s.se_final)) << ','
          << format17(s.mean_last_n) << ','
          << (s.cells < 2 ? "na" : format17(s.se_last_n)) << '\n';
    }
  }
  {
    std::ofstream out(out_dir + "/curves.csv");
    if (!out) throw IoError("cannot write curves.csv");
    out << "method,seed,t,cum_regret\n";
    const int stride = std::max(1, result.config.curve_stride);
    for (const auto& cell : result.cells) {
      if (cell.status != "ok") continue;
      const int T = static_cast<int>(cell.cum_regret.size());
      for (int t = stride; t <= T; t += stride)
        out << cell.method << ',' << cell.seed << ',' << t << ','
            << format17(cell.cum_regret[t - 1]) << '\n';
      if (T % stride != 0)
        out << cell.method << ',' << cell.seed << ',' << T << ','
            << format17(cell.cum_regret[T - 1]) << '\n';
    }
  }
  {
    json j;
    j["schema_version"] = result.config.schema_version;
    j["name"] = result.config.name;
    j["experiment"] = result.config.experiment;
    j["horizon"] = result.config.horizon;
    j["campaign_seed"] = result.config.campaign_seed;
    j["last_n"] = result.config.last_n;
    j["curve_stride"] = result.config.curve_stride;
    j["seeds"] = result.config.seeds;
#ifdef GEOBANDIT_VERSION
    j["version"] = GEOBANDIT_VERSION;
#else
    j["version"] = "unknown";
#endif
    if (result.config.experiment == "ris")
      j["channel"] = ris_channel_to_json(result.config.ris_channel);
    else
      j["channel"] = static_channel_to_json(result.config.static_channel);
    json methods = json::array();
    for (const auto& m : result.config.methods) methods.push_back(agent_to_json(m));
    j["methods"] = methods;
    json cells = json::array();
    for (const auto& cell : result.cells) {
      json cj;
      cj["method"] = cell.method;
      cj["seed"] = cell.seed;
      cj["status"] = cell.status;
      cj["final_cum_regret"] = cell.final_cum;
      cj["last_n_mean_regret"] = cell.last_n_mean;
      cj["oracle_violation"] = cell.oracle_violation;
      cells.push_back(cj);
    }
    j["cells"] = cells;
    json summary = json::array();
    for (const auto& s : result.summary) {
      json sj;
      sj["method"] = s.method;
      sj["cells"] = s.cells;
      sj["mean_final_regret"] = s.mean_final;
      sj["se_final_regret"] = s.se_final;
      sj["mean_last_n_regret"] = s.mean_last_n;
      sj["se_last_n_regret"] = s.se_last_n;
      summary.push_back(sj);
    }
    j["summary"] = summary;
    std::ofstream out(out_dir + "/campaign.json");
    if (!out) throw IoError("cannot write campaign.json");
    out << j.dump(2) << '\n';
  }
}

CampaignResult load_campaign(const std::string& dir) {
  std::ifstream in(dir + "/campaign.json");
  if (!in) throw IoError("cannot open " + dir + "/campaign.json");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(std::string("campaign.json parse error: ") + e.what());
  }
  CampaignResult result;
  result.config.schema_version = j.value("schema_version", 1);
  result.config.name = j.value("name", "");
  result.config.experiment = j.value("experiment", "");
  result.config.horizon = j.value("horizon", 0);
  result.config.campaign_seed = j.value("campaign_seed", 0);
  result.config.last_n = j.value("last_n", 0);
  result.config.curve_stride = j.value("curve_stride", 0);
  if (j.contains("seeds"))
    result.config.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("channel")) {
    if (result.config.experiment == "ris")
      apply_ris_channel_json(j.at("channel"), result.config.ris_channel);
    else
      apply_static_channel_json(j.at("channel"), result.config.static_channel);
  }
  const Manifold manifold = experiment_manifold(result.config.experiment);
  if (j.contains("methods"))
    for (const auto& mj : j.at("methods")) {
      AgentConfig a = default_agent_config(mj.at("method"), manifold);
      apply_agent_json(mj, a);
      result.config.methods.push_back(std::move(a));
    }
  for (const auto& cj : j.at("cells")) {
    CellResult cell;
    cell.method = cj.at("method");
    cell.seed = cj.at("seed");
    cell.status = cj.at("status");
    cell.final_cum = json_number(cj, "final_cum_regret");
    cell.last_n_mean = json_number(cj, "last_n_mean_regret");
    cell.oracle_violation = cj.value("oracle_violation", false);
    result.cells.push_back(std::move(cell));
  }
  if (j.contains("summary"))
    for (const auto& sj : j.at("summary")) {
      MethodSummary s;
      s.method = sj.at("method");
      s.cells = sj.at("cells");
      s.mean_final = json_number(sj, "mean_final_regret");
      s.se_final = json_number(sj, "se_final_regret");
      s.mean_last_n = json_number(sj, "mean_last_n_regret");
      s.se_last_n = json_number(sj, "se_last_n_regret");
      result.summary.push_back(s);
    }
  return result;
}

std::vector<double> method_metric(const CampaignResult& result,
                                  const std::string& method,
                                  const std::string& metric) {
  std::map<std::uint64_t, double> by_seed;
  for (const auto& cell : result.cells) {
    if (cell.method != method) continue;
    if (cell.status != "ok")
      throw SpecError("method " + method + " has a failed cell (seed " +
                      std::to_string(cell.seed) + ")");
    by_seed[cell.seed] = metric == "last_n" ? cell.last_n_mean : cell.final_cum;
  }
  if (by_seed.empty()) throw ConfigError("no cells for method " + method);
  std::vector<double> out;
  out.reserve(by_seed.size());
  for (const auto& [seed, v] : by_seed) out.push_back(v);
  return out;
}

}  // namespace geobandit
