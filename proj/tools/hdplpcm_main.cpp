// Command-line front end: simulate / fit / summarize / evaluate / diagnose.
// Exit codes: 0 success, 2 usage, 3 input error, 4 numerical failure.

#include <CLI11.hpp>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <thread>

#include "hdplpcm/chain_io.hpp"
#include "hdplpcm/errors.hpp"
#include "hdplpcm/gibbs.hpp"
#include "hdplpcm/likelihood.hpp"
#include "hdplpcm/network.hpp"
#include "hdplpcm/simulate.hpp"
#include "hdplpcm/summary.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hdplpcm;

namespace {

std::atomic<bool> g_stop{false};
void handle_signal(int) { g_stop.store(true); }

constexpr int kExitUsage = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumeric = 4;

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// All writes go through a temp file renamed into place on success.
void atomic_write(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("failed writing " + path.string());
  }
  fs::rename(tmp, path);
}

int worker_count() {
  if (const char* env = std::getenv("HDPLPCM_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ParseError("config file " + path + ": " + e.what());
  }
}

template <typename T>
void maybe_set(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

SamplerConfig sampler_from_json(const json& root) {
  SamplerConfig cfg;
  if (!root.contains("sampler")) return cfg;
  const json& j = root.at("sampler");
  maybe_set(j, "n_tune", cfg.n_tune);
  maybe_set(j, "n_burn", cfg.n_burn);
  maybe_set(j, "n_keep", cfg.n_keep);
  maybe_set(j, "thin", cfg.thin);
  maybe_set(j, "L", cfg.L);
  maybe_set(j, "p", cfg.p);
  maybe_set(j, "step_x", cfg.step_x);
  maybe_set(j, "step_beta0", cfg.step_beta0);
  maybe_set(j, "target_accept_low", cfg.target_accept_low);
  maybe_set(j, "target_accept_high", cfg.target_accept_high);
  maybe_set(j, "tune_interval", cfg.tune_interval);
  maybe_set(j, "seed", cfg.seed);
  maybe_set(j, "anchored_tuning", cfg.anchored_tuning);
  maybe_set(j, "init_refine_sweeps", cfg.init_refine_sweeps);
  maybe_set(j, "store_positions", cfg.store_positions);
  maybe_set(j, "store_transitions", cfg.store_transitions);
  maybe_set(j, "checkpoint_every", cfg.checkpoint_every);
  if (j.contains("hyper")) {
    const json& h = j.at("hyper");
    maybe_set(h, "tau2", cfg.hyper.tau2);
    maybe_set(h, "b", cfg.hyper.b);
    maybe_set(h, "gamma", cfg.hyper.gamma);
    maybe_set(h, "alpha0", cfg.hyper.alpha0);
    maybe_set(h, "alpha_kappa", cfg.hyper.alpha_kappa);
    maybe_set(h, "rho", cfg.hyper.rho);
  }
  return cfg;
}

json sampler_to_json(const SamplerConfig& c) {
  return json{{"n_tune", c.n_tune},
              {"n_burn", c.n_burn},
              {"n_keep", c.n_keep},
              {"thin", c.thin},
              {"L", c.L},
              {"p", c.p},
              {"step_x", c.step_x},
              {"step_beta0", c.step_beta0},
              {"target_accept_low", c.target_accept_low},
              {"target_accept_high", c.target_accept_high},
              {"tune_interval", c.tune_interval},
              {"seed", c.seed},
              {"anchored_tuning", c.anchored_tuning},
              {"init_refine_sweeps", c.init_refine_sweeps},
              {"store_positions", c.store_positions},
              {"store_transitions", c.store_transitions},
              {"checkpoint_every", c.checkpoint_every},
              {"hyper",
               {{"tau2", c.hyper.tau2},
                {"b", c.hyper.b},
                {"gamma", c.hyper.gamma},
                {"alpha0", c.hyper.alpha0},
                {"alpha_kappa", c.hyper.alpha_kappa},
                {"rho", c.hyper.rho}}}};
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const json& config_echo,
                    const std::vector<std::string>& files) {
  json manifest{{"format", "hdplpcm-run"},
                {"version", 1},
                {"command", command},
                {"config", config_echo},
                {"files", files}};
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

// --- simulate ---

struct SimulateArgs {
  std::string preset;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  bool strict_occupancy = true;
};

SimSpec spec_from_args(const SimulateArgs& args, const json& file_cfg) {
  SimSpec spec;
  if (args.preset == "homogeneous") {
    spec = homogeneous_spec(args.seed);
  } else if (args.preset == "inhomogeneous") {
    spec = inhomogeneous_spec(args.seed);
  } else if (args.preset == "custom") {
    if (!file_cfg.contains("sim"))
      throw InvalidArgument("custom preset needs a `sim` config section");
    spec = homogeneous_spec(args.seed);
  } else {
    throw CLI::ValidationError("preset must be homogeneous|inhomogeneous|custom");
  }
  if (file_cfg.contains("sim")) {
    const json& j = file_cfg.at("sim");
    maybe_set(j, "n", spec.n);
    maybe_set(j, "T", spec.T);
    maybe_set(j, "p", spec.p);
    maybe_set(j, "lambda", spec.lambda);
    maybe_set(j, "beta0", spec.beta0);
    maybe_set(j, "sigma_shape", spec.sigma_shape);
    maybe_set(j, "sigma_scale", spec.sigma_scale);
    maybe_set(j, "sigma_is_sd", spec.sigma_is_sd);
    maybe_set(j, "max_retries", spec.max_retries);
    if (j.contains("group_locations")) {
      const auto rows = j.at("group_locations")
                            .get<std::vector<std::vector<double>>>();
      spec.group_locations.resize(spec.p, static_cast<int>(rows[0].size()));
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
          spec.group_locations(r, c) = rows[r][c];
    }
    if (j.contains("self_const"))
      spec.self_const = j.at("self_const").get<std::vector<double>>();
    else if (spec.T != static_cast<int>(spec.self_const.size()))
      spec.self_const.assign(spec.T, spec.self_const.empty()
                                          ? 20.0
                                          : spec.self_const.front());
    if (j.contains("active_sets")) {
      auto sets = j.at("active_sets").get<std::vector<std::vector<int>>>();
      for (auto& s : sets)
        for (auto& g : s) --g;  // file format is 1-based
      spec.active_sets = std::move(sets);
    } else if (spec.T != static_cast<int>(spec.active_sets.size())) {
      std::vector<int> all(spec.G());
      for (int g = 0; g < spec.G(); ++g) all[g] = g;
      spec.active_sets.assign(spec.T, all);
    }
    if (j.contains("pi0_alpha")) {
      const auto a = j.at("pi0_alpha").get<std::vector<double>>();
      spec.pi0_alpha =
          Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
    } else if (spec.pi0_alpha.size() != spec.G()) {
      spec.pi0_alpha = Eigen::VectorXd::Constant(spec.G(), 10.0);
    }
  }
  spec.seed = args.seed;
  spec.retry_unoccupied_groups = args.strict_occupancy;
  return spec;
}

json spec_echo(const SimSpec& spec) {
  std::vector<std::vector<double>> locs(spec.group_locations.rows());
  for (Eigen::Index r = 0; r < spec.group_locations.rows(); ++r)
    for (Eigen::Index c = 0; c < spec.group_locations.cols(); ++c)
      locs[r].push_back(spec.group_locations(r, c));
  std::vector<std::vector<int>> sets;
  for (const auto& s : spec.active_sets) {
    std::vector<int> one;
    for (int g : s) one.push_back(g + 1);
    sets.push_back(one);
  }
  return json{{"n", spec.n},
              {"T", spec.T},
              {"p", spec.p},
              {"group_locations", locs},
              {"sigma_shape", spec.sigma_shape},
              {"sigma_scale", spec.sigma_scale},
              {"sigma_is_sd", spec.sigma_is_sd},
              {"lambda", spec.lambda},
              {"beta0", spec.beta0},
              {"self_const", spec.self_const},
              {"active_sets", sets},
              {"pi0_alpha", std::vector<double>(
                                spec.pi0_alpha.data(),
                                spec.pi0_alpha.data() + spec.pi0_alpha.size())},
              {"seed", spec.seed},
              {"max_retries", spec.max_retries},
              {"retry_degenerate_slices", spec.retry_degenerate_slices},
              {"retry_unoccupied_groups", spec.retry_unoccupied_groups}};
}

int cmd_simulate(const SimulateArgs& args) {
  const json file_cfg = load_config_file(args.config_path);
  const SimSpec spec = spec_from_args(args, file_cfg);
  spec.validate();
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);

  const auto res = simulate(spec);
  if (res.retries > 0)
    std::cerr << "note: simulation retried " << res.retries
              << " time(s) to avoid degenerate draws\n";

  std::ostringstream edges;
  export_edge_list(res.net, edges);
  atomic_write(dir / "edges.csv", edges.str());

  std::ostringstream labels;
  labels << "t,actor,group\n";
  for (int t = 0; t < res.Z.T(); ++t)
    for (int i = 0; i < res.Z.n(); ++i)
      labels << (t + 1) << ',' << (i + 1) << ',' << (res.Z.Z(t, i) + 1)
             << '\n';
  atomic_write(dir / "truth_labels.csv", labels.str());

  std::ostringstream pos;
  pos << "t,actor";
  for (int k = 0; k < res.X.p(); ++k) pos << ",x" << (k + 1);
  pos << '\n';
  for (int t = 0; t < res.X.T(); ++t)
    for (int i = 0; i < res.X.n(); ++i) {
      pos << (t + 1) << ',' << (i + 1);
      for (int k = 0; k < res.X.p(); ++k)
        pos << ',' << format_double(res.X.X[t](k, i));
      pos << '\n';
    }
  atomic_write(dir / "truth_positions.csv", pos.str());

  json echo = spec_echo(spec);
  echo["retries"] = res.retries;
  echo["sigma2"] = std::vector<double>(res.sigma2.data(),
                                       res.sigma2.data() + res.sigma2.size());
  echo["pi0"] = std::vector<double>(res.pi0.data(),
                                    res.pi0.data() + res.pi0.size());
  write_manifest(dir, "simulate", json{{"preset", args.preset}, {"sim", echo}},
                 {"edges.csv", "truth_labels.csv", "truth_positions.csv"});
  return 0;
}

// --- fit ---

struct FitArgs {
  std::string edges_path;
  std::string config_path;
  std::string out_dir;
  std::string resume_path;
  std::string format = "binary";
  std::optional<std::uint64_t> seed;
  std::optional<int> n, T;
  int window = 1;
  int min_degree = 0;
  int chains = 1;
  std::optional<int> n_tune, n_burn, n_keep, thin, L, p, checkpoint_every;
  bool no_hyper = false;
};

DynamicNetwork load_and_preprocess(const FitArgs& args,
                                   std::vector<int>* kept_out) {
  auto net = load_edge_list_file(args.edges_path, args.n, args.T);
  if (args.window > 1) net = window_aggregate(net, args.window);
  if (args.min_degree > 0) {
    auto res = filter_min_degree(net, args.min_degree);
    if (kept_out) *kept_out = res.kept;
    net = std::move(res.net);
  }
  return net;
}

int cmd_fit(const FitArgs& args) {
  const json file_cfg = load_config_file(args.config_path);
  SamplerConfig cfg = sampler_from_json(file_cfg);
  if (args.seed) cfg.seed = *args.seed;
  if (args.n_tune) cfg.n_tune = *args.n_tune;
  if (args.n_burn) cfg.n_burn = *args.n_burn;
  if (args.n_keep) cfg.n_keep = *args.n_keep;
  if (args.thin) cfg.thin = *args.thin;
  if (args.L) cfg.L = *args.L;
  if (args.p) cfg.p = *args.p;
  if (args.checkpoint_every) cfg.checkpoint_every = *args.checkpoint_every;
  if (args.no_hyper) cfg.hyper = HyperToggles::none();
  cfg.validate();
  const ChainFormat format = args.format == "jsonl"
                                 ? ChainFormat::jsonl
                                 : ChainFormat::binary;
  if (args.format != "binary" && args.format != "jsonl")
    throw CLI::ValidationError("--format must be binary or jsonl");

  std::vector<int> kept;
  const DynamicNetwork net = load_and_preprocess(args, &kept);
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);

  const int n_chains = std::max(args.chains, 1);
  std::vector<Chain> chains(n_chains);
  std::vector<std::string> errors(n_chains);
  const auto t0 = std::chrono::steady_clock::now();

  auto run_one = [&](int k) {
    try {
      SamplerConfig ck = cfg;
      ck.seed = cfg.seed + static_cast<std::uint64_t>(k);
      if (ck.checkpoint_every > 0)
        ck.checkpoint_path =
            (dir / ("checkpoint_" + std::to_string(k) + ".bin")).string();
      if (!args.resume_path.empty()) {
        auto cp = load_checkpoint(args.resume_path);
        chains[k] = resume_chain(net, std::move(cp), &g_stop);
      } else {
        chains[k] = run_chain_checkpointed(net, ck, &g_stop);
      }
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };
  if (!args.resume_path.empty() && n_chains != 1)
    throw InvalidArgument("--resume works with a single chain");

  const int workers = std::min(worker_count(), n_chains);
  if (workers <= 1) {
    for (int k = 0; k < n_chains; ++k) run_one(k);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&]() {
        for (int k = next.fetch_add(1); k < n_chains; k = next.fetch_add(1))
          run_one(k);
      });
    for (auto& th : pool) th.join();
  }
  for (int k = 0; k < n_chains; ++k)
    if (!errors[k].empty()) throw NumericalError(errors[k]);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  std::vector<std::string> files;
  for (int k = 0; k < n_chains; ++k) {
    const std::string name = "chain_" + std::to_string(k) +
                             (format == ChainFormat::jsonl ? ".jsonl" : ".bin");
    save_chain_file(chains[k], (dir / name).string(), format);
    files.push_back(name);
  }
  if (!kept.empty() || !net.actor_names().empty()) {
    std::ostringstream map;
    map << "index,original_index,name\n";
    for (int i = 0; i < net.n(); ++i) {
      const int orig = kept.empty() ? i : kept[i];
      map << (i + 1) << ',' << (orig + 1) << ','
          << (net.actor_names().empty() ? std::to_string(orig + 1)
                                        : net.actor_names()[i])
          << '\n';
    }
    atomic_write(dir / "actors.csv", map.str());
    files.push_back("actors.csv");
  }

  json report{{"n", net.n()},
              {"T", net.T()},
              {"chains", n_chains},
              {"runtime_seconds", seconds},
              {"interrupted", false}};
  json per_chain = json::array();
  for (const auto& chain : chains) {
    const auto& last = chain.samples.empty() ? Hyperparams{}
                                             : chain.samples.back().hyper;
    per_chain.push_back(
        {{"seed", chain.config.seed},
         {"kept", chain.samples.size()},
         {"interrupted", chain.interrupted},
         {"tuned_step_x", chain.tuned_step_x},
         {"tuned_step_beta0", chain.tuned_step_beta0},
         {"tune_accept_positions", chain.tune_stats.position_rate()},
         {"tune_accept_intercept", chain.tune_stats.intercept_rate()},
         {"accept_positions", chain.run_stats.position_rate()},
         {"accept_intercept", chain.run_stats.intercept_rate()},
         {"final_hyperparams",
          {{"gamma", last.gamma},
           {"alpha0", last.alpha0},
           {"alpha", last.alpha},
           {"kappa", last.kappa},
           {"rho", last.rho},
           {"tau2", last.tau2},
           {"b", last.b}}}});
    if (chain.interrupted) report["interrupted"] = true;
  }
  report["per_chain"] = per_chain;
  atomic_write(dir / "report.json", report.dump(2) + "\n");
  files.push_back("report.json");

  json config_echo{{"sampler", sampler_to_json(cfg)},
                   {"edges", args.edges_path},
                   {"window", args.window},
                   {"min_degree", args.min_degree},
                   {"chains", n_chains},
                   {"format", args.format}};
  write_manifest(dir, "fit", config_echo, files);
  return report["interrupted"].get<bool>() ? kExitNumeric : 0;
}

// --- summarize ---

struct SummarizeArgs {
  std::string chain_path;
  std::string out_dir;
  int drop = 0;
};

int cmd_summarize(const SummarizeArgs& args) {
  Chain chain = load_chain_file(args.chain_path);
  if (args.drop > 0) {
    if (args.drop >= static_cast<int>(chain.samples.size()))
      throw InvalidArgument("--drop removes every kept sample");
    chain.samples.erase(chain.samples.begin(),
                        chain.samples.begin() + args.drop);
    chain.log_post.erase(chain.log_post.begin(),
                         chain.log_post.begin() + args.drop);
    chain.log_lik.erase(chain.log_lik.begin(),
                        chain.log_lik.begin() + args.drop);
  }
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);
  const auto summary = summarize(chain);
  const int T = chain.samples[0].labels.T();
  const int n = chain.samples[0].labels.n();
  const int L = chain.samples[0].L();

  std::vector<std::string> files;
  {
    std::ostringstream out;
    out << "t,actor,group\n";
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i)
        out << (t + 1) << ',' << (i + 1) << ','
            << (summary.selected.Z(t, i) + 1) << '\n';
    atomic_write(dir / "selected_labels.csv", out.str());
    files.push_back("selected_labels.csv");
  }
  {
    std::ostringstream out;
    out << "t,i,j,probability\n";
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
          out << (t + 1) << ',' << (i + 1) << ',' << (j + 1) << ','
              << format_double(summary.coassign[t](i, j)) << '\n';
    atomic_write(dir / "coassignment.csv", out.str());
    files.push_back("coassignment.csv");
  }
  {
    std::ostringstream out;
    out << "t,groups,probability\n";
    for (int t = 0; t < T; ++t)
      for (int k = 0; k <= L; ++k)
        if (summary.group_counts(t, k) > 0.0)
          out << (t + 1) << ',' << k << ','
              << format_double(summary.group_counts(t, k)) << '\n';
    atomic_write(dir / "group_counts.csv", out.str());
    files.push_back("group_counts.csv");
  }
  if (!summary.aligned_positions.X.empty()) {
    std::ostringstream out;
    out << "t,actor";
    for (int k = 0; k < summary.aligned_positions.p(); ++k)
      out << ",x" << (k + 1);
    out << '\n';
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < n; ++i) {
        out << (t + 1) << ',' << (i + 1);
        for (int k = 0; k < summary.aligned_positions.p(); ++k)
          out << ',' << format_double(summary.aligned_positions.X[t](k, i));
        out << '\n';
      }
    atomic_write(dir / "aligned_positions.csv", out.str());
    files.push_back("aligned_positions.csv");
  }
  {
    std::ostringstream out;
    out << "group";
    for (int k = 0; k < summary.selected_mu.rows(); ++k)
      out << ",mu" << (k + 1);
    out << ",radius\n";
    for (int g = 0; g < L; ++g) {
      out << (g + 1);
      for (int k = 0; k < summary.selected_mu.rows(); ++k)
        out << ',' << format_double(summary.selected_mu(k, g));
      out << ',' << format_double(2.0 * summary.selected_sigma[g]) << '\n';
    }
    atomic_write(dir / "ellipses.csv", out.str());
    files.push_back("ellipses.csv");
  }
  {
    std::ostringstream out;
    out << "t,from,to,count\n";
    for (std::size_t t = 0; t < summary.flows.size(); ++t)
      for (int g = 0; g < L; ++g)
        for (int h = 0; h < L; ++h)
          if (summary.flows[t](g, h) > 0)
            out << (t + 1) << ',' << (g + 1) << ',' << (h + 1) << ','
                << summary.flows[t](g, h) << '\n';
    atomic_write(dir / "flows.csv", out.str());
    files.push_back("flows.csv");
  }
  write_manifest(dir, "summarize",
                 json{{"chain", args.chain_path},
                      {"drop", args.drop},
                      {"selected_sample_index", summary.selected_sample_index}},
                 files);
  return 0;
}

// --- evaluate ---

struct EvaluateArgs {
  std::string chain_path;
  std::string edges_path;
  std::string truth_path;
  std::string out_dir;
  std::optional<int> n, T;
};

LabelSequences load_truth_labels(const std::string& path, int n, int T) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open truth labels: " + path);
  LabelSequences truth = LabelSequences::constant(T, n, -1);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream iss(line);
    long t, i, g;
    if (!(iss >> t)) continue;
    if (lineno == 1 && !(line.find_first_not_of(
                             "0123456789 \t\r") == std::string::npos))
      continue;  // header
    if (!(iss >> i >> g)) throw ParseError("expected `t,actor,group`", lineno);
    if (t < 1 || t > T || i < 1 || i > n)
      throw ParseError("truth label outside the network", lineno);
    truth.Z(static_cast<int>(t - 1), static_cast<int>(i - 1)) =
        static_cast<int>(g - 1);
  }
  if ((truth.Z.array() < 0).any())
    throw ParseError("truth labels missing for some (t, actor)");
  return truth;
}

int cmd_evaluate(const EvaluateArgs& args) {
  const Chain chain = load_chain_file(args.chain_path);
  const auto net = load_edge_list_file(args.edges_path, args.n, args.T);
  if (net.n() != chain.n || net.T() != chain.T)
    throw InvalidArgument("network does not match the chain dimensions");
  const auto truth = load_truth_labels(args.truth_path, net.n(), net.T());
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);

  const auto summary_sel = select_partition(chain);
  const double auc = in_sample_auc(net, chain);
  double vi_sum = 0.0, ari_sum = 0.0;
  std::ostringstream per_time;
  per_time << "t,vi,ari\n";
  for (int t = 0; t < net.T(); ++t) {
    const Eigen::VectorXi zt = truth.Z.row(t).transpose();
    const Eigen::VectorXi st = summary_sel.labels.Z.row(t).transpose();
    const double vi = vi_distance(zt, st);
    const double ari = adjusted_rand_index(zt, st);
    vi_sum += vi;
    ari_sum += ari;
    per_time << (t + 1) << ',' << format_double(vi) << ','
             << format_double(ari) << '\n';
  }
  const double vi_avg = vi_sum / net.T();
  const double ari_avg = ari_sum / net.T();

  std::ostringstream out;
  out << "metric,value\n";
  out << "auc," << format_double(auc) << '\n';
  out << "vi_time_averaged," << format_double(vi_avg) << '\n';
  out << "ari_time_averaged," << format_double(ari_avg) << '\n';
  atomic_write(dir / "metrics.csv", out.str());
  atomic_write(dir / "metrics_per_time.csv", per_time.str());
  write_manifest(dir, "evaluate",
                 json{{"chain", args.chain_path},
                      {"edges", args.edges_path},
                      {"truth", args.truth_path}},
                 {"metrics.csv", "metrics_per_time.csv"});
  std::cout << "auc=" << auc << " vi=" << vi_avg << " ari=" << ari_avg
            << '\n';
  return 0;
}

// --- diagnose ---

struct DiagnoseArgs {
  std::string chain_path;
  std::string out_dir;
  int max_lag = 200;
};

int cmd_diagnose(const DiagnoseArgs& args) {
  const Chain chain = load_chain_file(args.chain_path);
  if (chain.samples.empty()) throw InvalidArgument("chain has no samples");
  const fs::path dir(args.out_dir);
  fs::create_directories(dir);

  struct Series {
    std::string name;
    std::vector<double> values;
  };
  std::vector<Series> series;
  series.push_back({"log_post", chain.log_post});
  series.push_back({"log_lik", chain.log_lik});
  Series beta0{"beta0", {}}, lambda{"lambda", {}};
  for (const auto& s : chain.samples) {
    beta0.values.push_back(s.groups.beta0);
    lambda.values.push_back(s.groups.lambda);
  }
  series.push_back(beta0);
  series.push_back(lambda);

  std::ostringstream trace;
  trace << "sample,log_post,log_lik,beta0,lambda,gamma,alpha0,alpha,kappa,"
           "tau2,b\n";
  for (std::size_t s = 0; s < chain.samples.size(); ++s) {
    const auto& h = chain.samples[s].hyper;
    trace << (s + 1) << ',' << format_double(chain.log_post[s]) << ','
          << format_double(chain.log_lik[s]) << ','
          << format_double(chain.samples[s].groups.beta0) << ','
          << format_double(chain.samples[s].groups.lambda) << ','
          << format_double(h.gamma) << ',' << format_double(h.alpha0) << ','
          << format_double(h.alpha) << ',' << format_double(h.kappa) << ','
          << format_double(h.tau2) << ',' << format_double(h.b) << '\n';
  }
  atomic_write(dir / "trace.csv", trace.str());

  std::ostringstream acf, ess;
  acf << "series,lag,acf\n";
  ess << "series,ess,n\n";
  for (const auto& s : series) {
    try {
      const auto res = ess_and_acf(s.values, args.max_lag);
      for (std::size_t k = 0; k < res.acf.size(); ++k)
        acf << s.name << ',' << k << ',' << format_double(res.acf[k]) << '\n';
      ess << s.name << ',' << format_double(res.ess) << ','
          << s.values.size() << '\n';
    } catch (const Error& e) {
      std::cerr << "warning: ess(" << s.name << "): " << e.what() << '\n';
      ess << s.name << ",nan," << s.values.size() << '\n';
    }
  }
  atomic_write(dir / "acf.csv", acf.str());
  atomic_write(dir / "ess.csv", ess.str());
  write_manifest(dir, "diagnose",
                 json{{"chain", args.chain_path}, {"max_lag", args.max_lag}},
                 {"trace.csv", "acf.csv", "ess.csv"});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  CLI::App app{"Latent-space clustering of dynamic networks with an HDP "
               "prior over evolving communities"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate",
                                 "Generate a synthetic benchmark network");
  sim->add_option("preset", sim_args.preset,
                  "homogeneous | inhomogeneous | custom")
      ->required();
  sim->add_option("--config", sim_args.config_path, "JSON config file");
  sim->add_option("--seed", sim_args.seed, "RNG seed");
  sim->add_option("--out", sim_args.out_dir, "output directory")->required();
  sim->add_flag("!--allow-unoccupied", sim_args.strict_occupancy,
                "keep draws whose occupancy misses the schedule");

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "Run the MCMC sampler on an edge list");
  fit->add_option("--edges", fit_args.edges_path, "edge list file")
      ->required();
  fit->add_option("--config", fit_args.config_path, "JSON config file");
  fit->add_option("--out", fit_args.out_dir, "output directory")->required();
  fit->add_option("--seed", fit_args.seed, "RNG seed (overrides config)");
  fit->add_option("--n", fit_args.n, "declared actor count");
  fit->add_option("--T", fit_args.T, "declared time count");
  fit->add_option("--window", fit_args.window, "aggregation window");
  fit->add_option("--min-degree", fit_args.min_degree,
                  "drop actors below this degree everywhere");
  fit->add_option("--chains", fit_args.chains, "independent chains");
  fit->add_option("--tune", fit_args.n_tune, "tuning sweeps");
  fit->add_option("--burn", fit_args.n_burn, "burn-in sweeps");
  fit->add_option("--keep", fit_args.n_keep, "kept sweeps");
  fit->add_option("--thin", fit_args.thin, "thinning interval");
  fit->add_option("--L", fit_args.L, "truncation level");
  fit->add_option("--p", fit_args.p, "latent dimension");
  fit->add_option("--format", fit_args.format, "binary | jsonl");
  fit->add_option("--checkpoint-every", fit_args.checkpoint_every,
                  "sweeps between checkpoints");
  fit->add_option("--resume", fit_args.resume_path,
                  "continue from a checkpoint file");
  fit->add_flag("--no-hyper", fit_args.no_hyper,
                "freeze all hyperparameters");

  SummarizeArgs sum_args;
  auto* sum = app.add_subcommand("summarize",
                                 "Posterior partition and layout summaries");
  sum->add_option("--chain", sum_args.chain_path, "chain file")->required();
  sum->add_option("--out", sum_args.out_dir, "output directory")->required();
  sum->add_option("--drop", sum_args.drop, "drop this many leading samples");

  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate",
                                  "Score a chain against ground truth");
  eval->add_option("--chain", eval_args.chain_path, "chain file")->required();
  eval->add_option("--edges", eval_args.edges_path, "edge list")->required();
  eval->add_option("--truth-labels", eval_args.truth_path,
                   "ground-truth labels csv")
      ->required();
  eval->add_option("--out", eval_args.out_dir, "output directory")->required();
  eval->add_option("--n", eval_args.n, "declared actor count");
  eval->add_option("--T", eval_args.T, "declared time count");

  DiagnoseArgs diag_args;
  auto* diag = app.add_subcommand("diagnose", "Traces, ACFs, and ESS tables");
  diag->add_option("--chain", diag_args.chain_path, "chain file")->required();
  diag->add_option("--out", diag_args.out_dir, "output directory")->required();
  diag->add_option("--max-lag", diag_args.max_lag, "ACF horizon");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_args);
    if (fit->parsed()) return cmd_fit(fit_args);
    if (sum->parsed()) return cmd_summarize(sum_args);
    if (eval->parsed()) return cmd_evaluate(eval_args);
    if (diag->parsed()) return cmd_diagnose(diag_args);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const EmptyResult& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return 0;
}
