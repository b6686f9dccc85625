#include "hdplpcm/chain_io.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "hdplpcm/errors.hpp"

namespace hdplpcm {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'H', 'D', 'P', 'L', 'C', 'H', 'N', '1'};
constexpr std::uint32_t kVersion = 1;

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

json toggles_to_json(const HyperToggles& t) {
  return json{{"tau2", t.tau2},       {"b", t.b},
              {"gamma", t.gamma},     {"alpha0", t.alpha0},
              {"alpha_kappa", t.alpha_kappa}, {"rho", t.rho}};
}

HyperToggles toggles_from_json(const json& j) {
  HyperToggles t;
  t.tau2 = j.at("tau2");
  t.b = j.at("b");
  t.gamma = j.at("gamma");
  t.alpha0 = j.at("alpha0");
  t.alpha_kappa = j.at("alpha_kappa");
  t.rho = j.at("rho");
  return t;
}

json config_to_json(const SamplerConfig& c) {
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
              {"hyper", toggles_to_json(c.hyper)},
              {"anchored_tuning", c.anchored_tuning},
              {"init_refine_sweeps", c.init_refine_sweeps},
              {"store_positions", c.store_positions},
              {"store_transitions", c.store_transitions},
              {"checkpoint_every", c.checkpoint_every},
              {"checkpoint_path", c.checkpoint_path}};
}

SamplerConfig config_from_json(const json& j) {
  SamplerConfig c;
  c.n_tune = j.at("n_tune");
  c.n_burn = j.at("n_burn");
  c.n_keep = j.at("n_keep");
  c.thin = j.at("thin");
  c.L = j.at("L");
  c.p = j.at("p");
  c.step_x = j.at("step_x");
  c.step_beta0 = j.at("step_beta0");
  c.target_accept_low = j.at("target_accept_low");
  c.target_accept_high = j.at("target_accept_high");
  c.tune_interval = j.at("tune_interval");
  c.seed = j.at("seed");
  c.hyper = toggles_from_json(j.at("hyper"));
  c.anchored_tuning = j.at("anchored_tuning");
  c.init_refine_sweeps = j.at("init_refine_sweeps");
  c.store_positions = j.at("store_positions");
  c.store_transitions = j.at("store_transitions");
  c.checkpoint_every = j.at("checkpoint_every");
  c.checkpoint_path = j.at("checkpoint_path").get<std::string>();
  return c;
}

json hyper_to_json(const Hyperparams& h) {
  json j{{"gamma", h.gamma},
         {"alpha0", h.alpha0},
         {"alpha", h.alpha},
         {"kappa", h.kappa},
         {"rho", h.rho},
         {"tau2", h.tau2},
         {"a", h.a},
         {"b", h.b},
         {"a_tau", h.a_tau},
         {"b_tau", h.b_tau},
         {"c", h.c},
         {"d", h.d},
         {"a_gamma", h.a_gamma},
         {"b_gamma", h.b_gamma},
         {"a_alpha0", h.a_alpha0},
         {"b_alpha0", h.b_alpha0},
         {"a_alpha_kappa", h.a_alpha_kappa},
         {"b_alpha_kappa", h.b_alpha_kappa},
         {"a_rho", h.a_rho},
         {"b_rho", h.b_rho},
         {"mu_beta0", h.mu_beta0},
         {"sigma2_beta0", h.sigma2_beta0},
         {"mu_lambda", h.mu_lambda},
         {"sigma2_lambda", h.sigma2_lambda},
         {"mu0", std::vector<double>(h.mu0.data(), h.mu0.data() + h.mu0.size())}};
  return j;
}

Hyperparams hyper_from_json(const json& j) {
  Hyperparams h;
  h.gamma = j.at("gamma");
  h.alpha0 = j.at("alpha0");
  h.alpha = j.at("alpha");
  h.kappa = j.at("kappa");
  h.rho = j.at("rho");
  h.tau2 = j.at("tau2");
  h.a = j.at("a");
  h.b = j.at("b");
  h.a_tau = j.at("a_tau");
  h.b_tau = j.at("b_tau");
  h.c = j.at("c");
  h.d = j.at("d");
  h.a_gamma = j.at("a_gamma");
  h.b_gamma = j.at("b_gamma");
  h.a_alpha0 = j.at("a_alpha0");
  h.b_alpha0 = j.at("b_alpha0");
  h.a_alpha_kappa = j.at("a_alpha_kappa");
  h.b_alpha_kappa = j.at("b_alpha_kappa");
  h.a_rho = j.at("a_rho");
  h.b_rho = j.at("b_rho");
  h.mu_beta0 = j.at("mu_beta0");
  h.sigma2_beta0 = j.at("sigma2_beta0");
  h.mu_lambda = j.at("mu_lambda");
  h.sigma2_lambda = j.at("sigma2_lambda");
  const auto mu0 = j.at("mu0").get<std::vector<double>>();
  h.mu0 = Eigen::Map<const Eigen::VectorXd>(mu0.data(), mu0.size());
  return h;
}

json stats_to_json(const AcceptStats& s) {
  return json{{"position_accepts", s.position_accepts},
              {"position_proposals", s.position_proposals},
              {"intercept_accepts", s.intercept_accepts},
              {"intercept_proposals", s.intercept_proposals}};
}

AcceptStats stats_from_json(const json& j) {
  AcceptStats s;
  s.position_accepts = j.at("position_accepts");
  s.position_proposals = j.at("position_proposals");
  s.intercept_accepts = j.at("intercept_accepts");
  s.intercept_proposals = j.at("intercept_proposals");
  return s;
}

json header_json(const Chain& chain) {
  return json{{"format", "hdplpcm-chain"},
              {"version", kVersion},
              {"rng_algorithm", chain.rng_algorithm},
              {"n", chain.n},
              {"T", chain.T},
              {"config", config_to_json(chain.config)},
              {"n_samples", chain.samples.size()},
              {"tune_stats", stats_to_json(chain.tune_stats)},
              {"run_stats", stats_to_json(chain.run_stats)},
              {"tuned_step_x", chain.tuned_step_x},
              {"tuned_step_beta0", chain.tuned_step_beta0},
              {"interrupted", chain.interrupted}};
}

void header_into_chain(const json& j, Chain& chain) {
  if (j.at("format") != "hdplpcm-chain")
    throw ParseError("not a chain file");
  if (j.at("version").get<std::uint32_t>() != kVersion)
    throw ParseError("unsupported chain format version");
  chain.rng_algorithm = j.at("rng_algorithm").get<std::string>();
  chain.n = j.at("n");
  chain.T = j.at("T");
  chain.config = config_from_json(j.at("config"));
  chain.tune_stats = stats_from_json(j.at("tune_stats"));
  chain.run_stats = stats_from_json(j.at("run_stats"));
  chain.tuned_step_x = j.at("tuned_step_x");
  chain.tuned_step_beta0 = j.at("tuned_step_beta0");
  chain.interrupted = j.at("interrupted");
}

// --- binary primitives (little-endian native) ---

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError("truncated chain file");
  return v;
}

void put_doubles(std::ostream& out, const double* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void get_doubles(std::istream& in, double* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw ParseError("truncated chain file");
}

void write_sample_binary(std::ostream& out, const ModelState& s,
                         double log_post, double log_lik) {
  const int T = s.labels.T(), n = s.labels.n();
  const int L = s.L(), p = s.groups.p();
  put(out, log_post);
  put(out, log_lik);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) put<std::int32_t>(out, s.labels.Z(t, i));
  put_doubles(out, s.groups.mu.data(), static_cast<std::size_t>(p) * L);
  put_doubles(out, s.groups.sigma2.data(), L);
  put(out, s.groups.lambda);
  put(out, s.groups.beta0);
  put_doubles(out, s.trans.beta.data(), L);
  put_doubles(out, s.trans.pi0.data(), L);
  const double hy[7] = {s.hyper.gamma, s.hyper.alpha0, s.hyper.alpha,
                        s.hyper.kappa, s.hyper.rho,    s.hyper.tau2,
                        s.hyper.b};
  put_doubles(out, hy, 7);
  put<std::uint8_t>(out, s.positions.X.empty() ? 0 : 1);
  if (!s.positions.X.empty())
    for (int t = 0; t < T; ++t)
      put_doubles(out, s.positions.X[t].data(), static_cast<std::size_t>(p) * n);
  put<std::uint8_t>(out, s.trans.Pi.empty() ? 0 : 1);
  if (!s.trans.Pi.empty())
    for (const auto& P : s.trans.Pi)
      put_doubles(out, P.data(), static_cast<std::size_t>(L) * L);
}

void read_sample_binary(std::istream& in, int n, int T, int L, int p,
                        const Hyperparams& base, ModelState& s,
                        double& log_post, double& log_lik) {
  log_post = get<double>(in);
  log_lik = get<double>(in);
  s.labels.Z.resize(T, n);
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i) s.labels.Z(t, i) = get<std::int32_t>(in);
  s.groups.mu.resize(p, L);
  get_doubles(in, s.groups.mu.data(), static_cast<std::size_t>(p) * L);
  s.groups.sigma2.resize(L);
  get_doubles(in, s.groups.sigma2.data(), L);
  s.groups.lambda = get<double>(in);
  s.groups.beta0 = get<double>(in);
  s.trans.beta.resize(L);
  get_doubles(in, s.trans.beta.data(), L);
  s.trans.pi0.resize(L);
  get_doubles(in, s.trans.pi0.data(), L);
  double hy[7];
  get_doubles(in, hy, 7);
  s.hyper = base;
  s.hyper.gamma = hy[0];
  s.hyper.alpha0 = hy[1];
  s.hyper.alpha = hy[2];
  s.hyper.kappa = hy[3];
  s.hyper.rho = hy[4];
  s.hyper.tau2 = hy[5];
  s.hyper.b = hy[6];
  if (get<std::uint8_t>(in)) {
    s.positions = LatentPositions::zeros(T, n, p);
    for (int t = 0; t < T; ++t)
      get_doubles(in, s.positions.X[t].data(), static_cast<std::size_t>(p) * n);
  } else {
    s.positions.X.clear();
  }
  if (get<std::uint8_t>(in)) {
    s.trans.Pi.assign(T - 1, Eigen::MatrixXd::Zero(L, L));
    for (auto& P : s.trans.Pi)
      get_doubles(in, P.data(), static_cast<std::size_t>(L) * L);
  } else {
    s.trans.Pi.clear();
  }
}

json sample_to_json(const ModelState& s, double log_post, double log_lik) {
  const int T = s.labels.T(), n = s.labels.n();
  json j;
  j["log_post"] = log_post;
  j["log_lik"] = log_lik;
  std::vector<std::vector<int>> labels(T);
  for (int t = 0; t < T; ++t) {
    labels[t].resize(n);
    for (int i = 0; i < n; ++i) labels[t][i] = s.labels.Z(t, i) + 1;
  }
  j["labels"] = labels;
  auto mat = [](const Eigen::MatrixXd& M) {
    std::vector<std::vector<double>> rows(M.rows());
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      rows[r].resize(M.cols());
      for (Eigen::Index c = 0; c < M.cols(); ++c) rows[r][c] = M(r, c);
    }
    return rows;
  };
  j["mu"] = mat(s.groups.mu);
  j["sigma2"] =
      std::vector<double>(s.groups.sigma2.data(),
                          s.groups.sigma2.data() + s.groups.sigma2.size());
  j["lambda"] = s.groups.lambda;
  j["beta0"] = s.groups.beta0;
  j["beta"] = std::vector<double>(s.trans.beta.data(),
                                  s.trans.beta.data() + s.trans.beta.size());
  j["pi0"] = std::vector<double>(s.trans.pi0.data(),
                                 s.trans.pi0.data() + s.trans.pi0.size());
  j["hyper"] = {{"gamma", s.hyper.gamma}, {"alpha0", s.hyper.alpha0},
                {"alpha", s.hyper.alpha}, {"kappa", s.hyper.kappa},
                {"rho", s.hyper.rho},     {"tau2", s.hyper.tau2},
                {"b", s.hyper.b}};
  if (!s.positions.X.empty()) {
    std::vector<std::vector<std::vector<double>>> pos(T);
    for (int t = 0; t < T; ++t) pos[t] = mat(s.positions.X[t]);
    j["positions"] = pos;
  }
  if (!s.trans.Pi.empty()) {
    std::vector<std::vector<std::vector<double>>> Pi(s.trans.Pi.size());
    for (std::size_t t = 0; t < s.trans.Pi.size(); ++t)
      Pi[t] = mat(s.trans.Pi[t]);
    j["Pi"] = Pi;
  }
  return j;
}

void sample_from_json(const json& j, int n, int T, int L, int p,
                      const Hyperparams& base, ModelState& s, double& log_post,
                      double& log_lik) {
  log_post = j.at("log_post");
  log_lik = j.at("log_lik");
  s.labels.Z.resize(T, n);
  const auto& labels = j.at("labels");
  for (int t = 0; t < T; ++t)
    for (int i = 0; i < n; ++i)
      s.labels.Z(t, i) = labels.at(t).at(i).get<int>() - 1;
  auto mat = [](const json& rows, Eigen::MatrixXd& M) {
    for (Eigen::Index r = 0; r < M.rows(); ++r)
      for (Eigen::Index c = 0; c < M.cols(); ++c)
        M(r, c) = rows.at(r).at(c).get<double>();
  };
  s.groups.mu.resize(p, L);
  mat(j.at("mu"), s.groups.mu);
  const auto sigma2 = j.at("sigma2").get<std::vector<double>>();
  s.groups.sigma2 = Eigen::Map<const Eigen::VectorXd>(sigma2.data(), L);
  s.groups.lambda = j.at("lambda");
  s.groups.beta0 = j.at("beta0");
  const auto beta = j.at("beta").get<std::vector<double>>();
  s.trans.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), L);
  const auto pi0 = j.at("pi0").get<std::vector<double>>();
  s.trans.pi0 = Eigen::Map<const Eigen::VectorXd>(pi0.data(), L);
  s.hyper = base;
  const auto& hy = j.at("hyper");
  s.hyper.gamma = hy.at("gamma");
  s.hyper.alpha0 = hy.at("alpha0");
  s.hyper.alpha = hy.at("alpha");
  s.hyper.kappa = hy.at("kappa");
  s.hyper.rho = hy.at("rho");
  s.hyper.tau2 = hy.at("tau2");
  s.hyper.b = hy.at("b");
  if (j.contains("positions")) {
    s.positions = LatentPositions::zeros(T, n, p);
    for (int t = 0; t < T; ++t) mat(j.at("positions").at(t), s.positions.X[t]);
  } else {
    s.positions.X.clear();
  }
  if (j.contains("Pi")) {
    s.trans.Pi.assign(T - 1, Eigen::MatrixXd::Zero(L, L));
    for (int t = 0; t + 1 < T; ++t) mat(j.at("Pi").at(t), s.trans.Pi[t]);
  } else {
    s.trans.Pi.clear();
  }
}

// The per-sample hyper base: full Hyperparams of the first sample when
// available, else defaults; stored in the header so scalar-only samples
// reconstruct completely.
Hyperparams chain_base_hyper(const Chain& chain) {
  if (!chain.samples.empty()) return chain.samples.front().hyper;
  return Hyperparams{};
}

}  // namespace

void save_chain(const Chain& chain, std::ostream& out, ChainFormat format) {
  json header = header_json(chain);
  header["base_hyper"] = hyper_to_json(chain_base_hyper(chain));
  {
    std::vector<double> lp = chain.log_post, ll = chain.log_lik;
    // log traces ride along in the header for quick diagnostics
    header["log_post"] = lp;
    header["log_lik"] = ll;
  }
  if (format == ChainFormat::jsonl) {
    out << header.dump() << '\n';
    for (std::size_t s = 0; s < chain.samples.size(); ++s)
      out << sample_to_json(chain.samples[s], chain.log_post[s],
                            chain.log_lik[s])
                 .dump()
          << '\n';
    return;
  }
  out.write(kMagic, sizeof(kMagic));
  put(out, kVersion);
  const std::string head = header.dump();
  put<std::uint64_t>(out, head.size());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (std::size_t s = 0; s < chain.samples.size(); ++s)
    write_sample_binary(out, chain.samples[s], chain.log_post[s],
                        chain.log_lik[s]);
}

void save_chain_file(const Chain& chain, const std::string& path,
                     ChainFormat format) {
  std::ofstream out(path + ".tmp", std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  save_chain(chain, out, format);
  out.close();
  if (!out) throw IoError("failed writing " + path);
  std::remove(path.c_str());
  if (std::rename((path + ".tmp").c_str(), path.c_str()) != 0)
    throw IoError("cannot rename into place: " + path);
}

namespace {

Chain chain_from_header(const json& header) {
  Chain chain;
  header_into_chain(header, chain);
  chain.log_post = header.at("log_post").get<std::vector<double>>();
  chain.log_lik = header.at("log_lik").get<std::vector<double>>();
  return chain;
}

}  // namespace

Chain load_chain(std::istream& in) try {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in) throw ParseError("empty chain file");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) == 0) {
    const auto version = get<std::uint32_t>(in);
    if (version != kVersion) throw ParseError("unsupported chain version");
    const auto head_len = get<std::uint64_t>(in);
    std::string head(head_len, '\0');
    in.read(head.data(), static_cast<std::streamsize>(head_len));
    if (!in) throw ParseError("truncated chain header");
    const json header = parse_json(head, "chain header");
    Chain chain = chain_from_header(header);
    const Hyperparams base = hyper_from_json(header.at("base_hyper"));
    const std::size_t count = header.at("n_samples");
    const int L = chain.config.L, p = chain.config.p;
    chain.samples.resize(count);
    for (std::size_t s = 0; s < count; ++s) {
      double lp, ll;
      read_sample_binary(in, chain.n, chain.T, L, p, base, chain.samples[s],
                         lp, ll);
      if (lp != chain.log_post[s] || ll != chain.log_lik[s])
        throw ParseError("inconsistent log traces in chain file");
    }
    return chain;
  }
  // jsonl: first 8 bytes were part of the header line
  std::string rest;
  std::getline(in, rest);
  std::string first_line = std::string(magic, 8) + rest;
  const json header = parse_json(first_line, "chain header");
  Chain chain = chain_from_header(header);
  const Hyperparams base = hyper_from_json(header.at("base_hyper"));
  const std::size_t count = header.at("n_samples");
  const int L = chain.config.L, p = chain.config.p;
  chain.samples.resize(count);
  std::string line;
  for (std::size_t s = 0; s < count; ++s) {
    if (!std::getline(in, line)) throw ParseError("truncated jsonl chain");
    double lp, ll;
    sample_from_json(parse_json(line, "chain sample"), chain.n, chain.T, L, p, base,
                     chain.samples[s], lp, ll);
  }
  return chain;
} catch (const json::exception& e) {
  throw ParseError(std::string("malformed chain file: ") + e.what());
}

Chain load_chain_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open chain file: " + path);
  return load_chain(in);
}

void save_checkpoint(const Checkpoint& cp, const std::string& path) {
  std::ofstream out(path + ".tmp", std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  json meta{{"format", "hdplpcm-checkpoint"},
            {"version", kVersion},
            {"sweep", cp.sweep},
            {"phase", cp.phase},
            {"phase_iter", cp.phase_iter},
            {"step_x", cp.step_x},
            {"step_beta0", cp.step_beta0},
            {"state_hyper", hyper_to_json(cp.state.hyper)}};
  const std::string head = meta.dump();
  put<std::uint64_t>(out, head.size());
  out.write(head.data(), static_cast<std::streamsize>(head.size()));
  // partial chain first (it carries the dimensions), then the full sampler
  // state with positions and transitions always present
  {
    std::ostringstream chain_bytes;
    save_chain(cp.chain, chain_bytes, ChainFormat::binary);
    const std::string chain_str = chain_bytes.str();
    put<std::uint64_t>(out, chain_str.size());
    out.write(chain_str.data(),
              static_cast<std::streamsize>(chain_str.size()));
  }
  write_sample_binary(out, cp.state, 0.0, 0.0);
  out.close();
  if (!out) throw IoError("failed writing checkpoint: " + path);
  std::remove(path.c_str());
  if (std::rename((path + ".tmp").c_str(), path.c_str()) != 0)
    throw IoError("cannot rename checkpoint into place: " + path);
}

Checkpoint load_checkpoint(const std::string& path) try {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  const auto head_len = get<std::uint64_t>(in);
  std::string head(head_len, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head_len));
  if (!in) throw ParseError("truncated checkpoint");
  const json meta = parse_json(head, "checkpoint header");
  if (meta.at("format") != "hdplpcm-checkpoint")
    throw ParseError("not a checkpoint file");
  Checkpoint cp;
  cp.sweep = meta.at("sweep");
  cp.phase = meta.at("phase");
  cp.phase_iter = meta.at("phase_iter");
  cp.step_x = meta.at("step_x");
  cp.step_beta0 = meta.at("step_beta0");
  const Hyperparams hyper = hyper_from_json(meta.at("state_hyper"));

  const auto chain_len = get<std::uint64_t>(in);
  std::string chain_str(chain_len, '\0');
  in.read(chain_str.data(), static_cast<std::streamsize>(chain_len));
  if (!in) throw ParseError("truncated checkpoint chain");
  std::istringstream chain_in(chain_str);
  cp.chain = load_chain(chain_in);

  double lp, ll;
  read_sample_binary(in, cp.chain.n, cp.chain.T, cp.chain.config.L,
                     cp.chain.config.p, hyper, cp.state, lp, ll);
  cp.state.hyper = hyper;
  return cp;
} catch (const json::exception& e) {
  throw ParseError(std::string("malformed checkpoint: ") + e.what());
}

Chain run_chain_checkpointed(const DynamicNetwork& net,
                             const SamplerConfig& config,
                             const std::atomic<bool>* stop) {
  if (config.checkpoint_every <= 0) return run_chain(net, config, stop);
  const std::string path = config.checkpoint_path;
  const CheckpointSink sink = [&path](const Checkpoint& cp) {
    save_checkpoint(cp, path);
  };
  return run_chain(net, config, stop, sink);
}

}  // namespace hdplpcm
