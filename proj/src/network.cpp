#include "hdplpcm/network.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "hdplpcm/errors.hpp"

namespace hdplpcm {

DynamicNetwork::DynamicNetwork(int n, int T) : n_(n), T_(T) {
  if (n <= 0 || T <= 0)
    throw InvalidArgument("network sizes must be positive, got n=" +
                          std::to_string(n) + " T=" + std::to_string(T));
  adj_.assign(static_cast<std::size_t>(n) * n * T, 0);
}

std::size_t DynamicNetwork::index(int t, int i, int j) const {
  return (static_cast<std::size_t>(t) * n_ + i) * n_ + j;
}

void DynamicNetwork::set_edge(int t, int i, int j, bool value) {
  if (t < 0 || t >= T_ || i < 0 || i >= n_ || j < 0 || j >= n_)
    throw InvalidArgument("edge index out of range");
  if (i == j) throw InvalidArgument("self-loops are not allowed");
  adj_[index(t, i, j)] = value ? 1 : 0;
  adj_[index(t, j, i)] = value ? 1 : 0;
}

int DynamicNetwork::degree(int t, int i) const {
  int d = 0;
  for (int j = 0; j < n_; ++j) d += adj_[index(t, i, j)];
  return d;
}

long DynamicNetwork::edge_count() const {
  long total = 0;
  for (std::uint8_t v : adj_) total += v;
  return total / 2;
}

double DynamicNetwork::density() const {
  const double dyads = static_cast<double>(n_) * (n_ - 1) / 2.0 * T_;
  return edge_count() / dyads;
}

void DynamicNetwork::set_actor_names(std::vector<std::string> names) {
  if (!names.empty() && static_cast<int>(names.size()) != n_)
    throw InvalidArgument("actor_names size must equal n");
  actor_names_ = std::move(names);
}

void DynamicNetwork::set_time_labels(std::vector<std::string> labels) {
  if (!labels.empty() && static_cast<int>(labels.size()) != T_)
    throw InvalidArgument("time_labels size must equal T");
  time_labels_ = std::move(labels);
}

void DynamicNetwork::validate() const {
  for (int t = 0; t < T_; ++t)
    for (int i = 0; i < n_; ++i) {
      if (adj_[index(t, i, i)] != 0)
        throw InvalidArgument("nonzero diagonal at t=" + std::to_string(t));
      for (int j = 0; j < i; ++j) {
        const auto a = adj_[index(t, i, j)];
        if (a > 1) throw InvalidArgument("entries must be 0 or 1");
        if (a != adj_[index(t, j, i)])
          throw InvalidArgument("asymmetric adjacency");
      }
    }
}

namespace {

struct RawRecord {
  long line;
  int t;
  int i, j;  // resolved 0-based actor indices
};

std::vector<std::string> tokenize(const std::string& line) {
  std::string s = line;
  std::replace(s.begin(), s.end(), ',', ' ');
  std::vector<std::string> out;
  std::istringstream iss(s);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

bool parse_long(const std::string& tok, long& value) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

bool parse_double(const std::string& tok, double& value) {
  try {
    std::size_t pos = 0;
    value = std::stod(tok, &pos);
    return pos == tok.size();
  } catch (...) {
    return false;
  }
}

}  // namespace

DynamicNetwork load_edge_list(std::istream& source, std::optional<int> n,
                              std::optional<int> T) {
  struct Parsed {
    long line;
    long t;
    std::string a, b;
    double w;
  };
  std::vector<Parsed> rows;
  bool numeric_actors = true;
  std::string line;
  long lineno = 0;
  bool first_data_line = true;
  while (std::getline(source, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    long t_val;
    if (first_data_line && !parse_long(toks[0], t_val)) {
      first_data_line = false;  // header line
      continue;
    }
    first_data_line = false;
    if (toks.size() < 3 || toks.size() > 4)
      throw ParseError("expected `t i j [w]`, got " +
                           std::to_string(toks.size()) + " fields",
                       lineno);
    if (!parse_long(toks[0], t_val))
      throw ParseError("non-numeric time field '" + toks[0] + "'", lineno);
    double w = 1.0;
    if (toks.size() == 4 && !parse_double(toks[3], w))
      throw ParseError("non-numeric weight field '" + toks[3] + "'", lineno);
    if (w < 0.0) throw ParseError("negative weight", lineno);
    long ai, bi;
    if (!parse_long(toks[1], ai) || !parse_long(toks[2], bi))
      numeric_actors = false;
    rows.push_back({lineno, t_val, toks[1], toks[2], w});
  }

  // Resolve actor identifiers.
  std::vector<RawRecord> records;
  records.reserve(rows.size());
  std::vector<std::string> names;
  int max_actor = 0;
  long max_time = 0;
  if (numeric_actors) {
    for (const auto& r : rows) {
      long ai, bi;
      parse_long(r.a, ai);
      parse_long(r.b, bi);
      if (ai < 1 || bi < 1)
        throw ParseError("actor indices must be >= 1", r.line);
      if (n && (ai > *n || bi > *n))
        throw ParseError("actor index outside declared n=" +
                             std::to_string(*n),
                         r.line);
      if (ai == bi) throw ParseError("self-loop record", r.line);
      max_actor = std::max<long>(max_actor, std::max(ai, bi));
      records.push_back({r.line, static_cast<int>(r.t),
                         static_cast<int>(ai - 1), static_cast<int>(bi - 1)});
    }
  } else {
    std::map<std::string, int> ids;
    auto resolve = [&](const std::string& name, long line_) {
      auto it = ids.find(name);
      if (it != ids.end()) return it->second;
      const int id = static_cast<int>(ids.size());
      if (n && id >= *n)
        throw ParseError("more distinct actors than declared n=" +
                             std::to_string(*n),
                         line_);
      ids.emplace(name, id);
      names.push_back(name);
      return id;
    };
    for (const auto& r : rows) {
      const int ai = resolve(r.a, r.line);
      const int bi = resolve(r.b, r.line);
      if (ai == bi) throw ParseError("self-loop record", r.line);
      records.push_back({r.line, static_cast<int>(r.t), ai, bi});
    }
    max_actor = static_cast<int>(names.size());
  }
  for (const auto& r : rows) {
    if (r.t < 1) throw ParseError("time indices must be >= 1", r.line);
    if (T && r.t > *T)
      throw ParseError("time index outside declared T=" + std::to_string(*T),
                       r.line);
    max_time = std::max(max_time, r.t);
  }

  const int n_out = n ? *n : max_actor;
  const int T_out = T ? *T : static_cast<int>(max_time);
  if (n_out <= 0 || T_out <= 0)
    throw ParseError(
        "cannot infer network size from an empty stream; pass n and T");

  DynamicNetwork net(n_out, T_out);
  for (const auto& rec : records) {
    const auto& row = rows[&rec - records.data()];
    if (row.w == 0.0) continue;
    net.set_edge(rec.t - 1, rec.i, rec.j, true);
  }
  if (!numeric_actors) {
    names.resize(n_out);
    for (int i = 0; i < n_out; ++i)
      if (names[i].empty()) names[i] = "actor_" + std::to_string(i + 1);
    net.set_actor_names(std::move(names));
  }
  return net;
}

DynamicNetwork load_edge_list_file(const std::string& path,
                                   std::optional<int> n,
                                   std::optional<int> T) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list: " + path);
  return load_edge_list(in, n, T);
}

void export_edge_list(const DynamicNetwork& net, std::ostream& out) {
  const auto& names = net.actor_names();
  auto label = [&](int i) {
    return names.empty() ? std::to_string(i + 1) : names[i];
  };
  for (int t = 0; t < net.T(); ++t)
    for (int i = 0; i < net.n(); ++i)
      for (int j = i + 1; j < net.n(); ++j)
        if (net(t, i, j))
          out << (t + 1) << ',' << label(i) << ',' << label(j) << '\n';
}

DynamicNetwork window_aggregate(const DynamicNetwork& net, int window) {
  if (window <= 0) throw InvalidArgument("window must be >= 1");
  const int T_out = (net.T() + window - 1) / window;
  DynamicNetwork out(net.n(), T_out);
  for (int t = 0; t < net.T(); ++t) {
    const int w = t / window;
    for (int i = 0; i < net.n(); ++i)
      for (int j = i + 1; j < net.n(); ++j)
        if (net(t, i, j)) out.set_edge(w, i, j, true);
  }
  out.set_actor_names(net.actor_names());
  return out;
}

FilterResult filter_min_degree(const DynamicNetwork& net, int dmin) {
  if (dmin < 0) throw InvalidArgument("dmin must be >= 0");
  std::vector<int> kept;
  for (int i = 0; i < net.n(); ++i) {
    int best = 0;
    for (int t = 0; t < net.T(); ++t) best = std::max(best, net.degree(t, i));
    if (best >= dmin) kept.push_back(i);
  }
  if (kept.empty())
    throw EmptyResult("degree filter removed every actor (dmin=" +
                      std::to_string(dmin) + ")");
  DynamicNetwork out(static_cast<int>(kept.size()), net.T());
  for (int t = 0; t < net.T(); ++t)
    for (std::size_t a = 0; a < kept.size(); ++a)
      for (std::size_t b = a + 1; b < kept.size(); ++b)
        if (net(t, kept[a], kept[b]))
          out.set_edge(t, static_cast<int>(a), static_cast<int>(b), true);
  if (!net.actor_names().empty()) {
    std::vector<std::string> names;
    names.reserve(kept.size());
    for (int i : kept) names.push_back(net.actor_names()[i]);
    out.set_actor_names(std::move(names));
  }
  return {std::move(out), std::move(kept)};
}

}  // namespace hdplpcm
