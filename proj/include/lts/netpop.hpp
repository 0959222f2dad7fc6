#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lts {

using NodeId = std::int32_t;
using Edge = std::pair<NodeId, NodeId>;

struct LoadReport {
  std::size_t edge_lines = 0;
  std::size_t duplicate_edges = 0;
  std::size_t self_loops = 0;
  std::size_t roster_only_nodes = 0;  // admitted from the attribute roster with no edge
};

/// Simple undirected graph over dense indices 0..N-1. Neighbor lists are
/// strictly sorted and symmetric. Immutable after construction.
class PopulationGraph {
 public:
  PopulationGraph() = default;

  /// Builds from labelled nodes and index pairs. Self-loops and duplicate
  /// edges (in either orientation) are dropped and counted in `report`.
  PopulationGraph(std::vector<std::string> labels, std::span<const Edge> edges,
                  LoadReport* report = nullptr);

  std::size_t node_count() const { return labels_.size(); }
  std::size_t edge_count() const { return adjacency_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId v) const {
    return {adjacency_.data() + offsets_[v], adjacency_.data() + offsets_[v + 1]};
  }
  std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }
  bool has_edge(NodeId a, NodeId b) const;

  const std::string& label(NodeId v) const { return labels_[v]; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<NodeId> find(std::string_view label) const;

  /// Every edge once, as (lo, hi), in lexicographic order.
  std::vector<Edge> edges() const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adjacency_;
};

struct LoadedGraph {
  PopulationGraph graph;
  LoadReport report;
};

/// Edge list: one edge per line, two labels separated by whitespace or a
/// comma; blank lines and lines starting with '#' are skipped. `roster` lists
/// extra labels admitted as nodes even when they have no edge.
LoadedGraph load_edges(std::istream& in, std::span<const std::string> roster = {});
LoadedGraph load_edges(const std::filesystem::path& path, std::span<const std::string> roster = {});

/// Writes `lo hi` label pairs, one per line. Isolated nodes are not written.
void write_edges(std::ostream& out, const PopulationGraph& g);

/// Numeric node attributes; missing values are 0.
class AttributeTable {
 public:
  AttributeTable() = default;
  AttributeTable(std::size_t node_count, std::vector<std::string> names);

  std::size_t node_count() const { return node_count_; }
  const std::vector<std::string>& names() const { return names_; }
  bool has(std::string_view name) const;
  std::span<const double> column(std::string_view name) const;
  std::span<double> column(std::string_view name);
  std::span<const double> column(std::size_t k) const { return values_[k]; }
  void add_column(std::string name, std::vector<double> values);

  /// True when every value of the column is 0 or 1.
  bool is_binary(std::string_view name) const;

 private:
  std::size_t index_of(std::string_view name) const;

  std::size_t node_count_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<double>> values_;
};

/// CSV with a header row; first column is the node label, the rest numeric.
/// Empty cells and "NA" are missing and become 0, as do nodes absent from the
/// file. Unknown labels and non-numeric cells are DataErrors.
AttributeTable load_attributes(std::istream& in, const PopulationGraph& graph);
AttributeTable load_attributes(const std::filesystem::path& path, const PopulationGraph& graph);

/// Labels in the first column of an attribute file (header skipped).
std::vector<std::string> read_attribute_roster(const std::filesystem::path& path);

void write_attributes(std::ostream& out, const PopulationGraph& g, const AttributeTable& attrs);

struct Population {
  PopulationGraph graph;
  AttributeTable attrs;
  LoadReport report;
};

/// Loads edges and attributes together; attribute-file nodes with no edge
/// are admitted as isolated nodes.
Population load_population(const std::filesystem::path& edges, const std::filesystem::path& attrs);

enum class DerivedKind { degree, deg2plus };

std::vector<double> derived_variable(const PopulationGraph& g, DerivedKind kind);

/// Per-node values of `name`: an attribute column if present, else the
/// derived variables "degree" / "deg2plus". Throws ConfigError otherwise.
std::vector<double> variable_values(const PopulationGraph& g, const AttributeTable& attrs,
                                    std::string_view name);

double mean(std::span<const double> v);

}  // namespace lts
