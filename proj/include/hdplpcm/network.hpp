#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hdplpcm {

// A sequence of T symmetric binary adjacency matrices over a fixed set of
// n actors. Immutable after construction; slices index time 0..T-1 and
// actors 0..n-1 internally, 1-based in the file formats.
class DynamicNetwork {
 public:
  DynamicNetwork(int n, int T);

  int n() const { return n_; }
  int T() const { return T_; }

  std::uint8_t operator()(int t, int i, int j) const {
    return adj_[index(t, i, j)];
  }
  // Sets y_ijt = y_jit = value; self-loops rejected.
  void set_edge(int t, int i, int j, bool value);

  int degree(int t, int i) const;
  long edge_count() const;
  double density() const;

  const std::vector<std::string>& actor_names() const { return actor_names_; }
  const std::vector<std::string>& time_labels() const { return time_labels_; }
  void set_actor_names(std::vector<std::string> names);
  void set_time_labels(std::vector<std::string> labels);

  // Checks the symmetry / zero-diagonal / 0-1 invariants.
  void validate() const;

 private:
  std::size_t index(int t, int i, int j) const;
  int n_, T_;
  std::vector<std::uint8_t> adj_;
  std::vector<std::string> actor_names_;  // empty or size n
  std::vector<std::string> time_labels_;  // empty or size T
};

// Parses a delimited edge list: one `t i j [w]` record per line, 1-based
// times, comma or whitespace separated, `#` comments, optional header
// (detected by a non-numeric first field). Numeric actor ids are used as
// 1-based indices directly; if any id is non-numeric, all ids are mapped
// by first appearance. Weights > 0 binarize to 1, weight 0 records are
// ignored. Repeated records are idempotent.
DynamicNetwork load_edge_list(std::istream& source,
                              std::optional<int> n = std::nullopt,
                              std::optional<int> T = std::nullopt);
DynamicNetwork load_edge_list_file(const std::string& path,
                                   std::optional<int> n = std::nullopt,
                                   std::optional<int> T = std::nullopt);

// Writes edges once per unordered pair, sorted by (t, i, j), 1-based, as
// `t,i,j` lines (actor names are emitted when present).
void export_edge_list(const DynamicNetwork& net, std::ostream& out);

// OR-aggregates slices into windows of the given width; the last window
// may be shorter. window == 1 is the identity.
DynamicNetwork window_aggregate(const DynamicNetwork& net, int window);

struct FilterResult {
  DynamicNetwork net;
  std::vector<int> kept;  // kept[i] = original index of retained actor i
};

// Keeps actor i iff its degree in the ORIGINAL network is >= dmin in at
// least one slice (single pass, no iterated peeling).
FilterResult filter_min_degree(const DynamicNetwork& net, int dmin);

}  // namespace hdplpcm
