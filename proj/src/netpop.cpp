#include "lts/netpop.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "lts/csv.hpp"
#include "lts/errors.hpp"

namespace lts {

PopulationGraph::PopulationGraph(std::vector<std::string> labels, std::span<const Edge> edges,
                                 LoadReport* report)
    : labels_(std::move(labels)) {
  const auto n = labels_.size();
  index_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!index_.emplace(labels_[i], static_cast<NodeId>(i)).second)
      throw DataError("duplicate node label '" + labels_[i] + "'");
  }

  std::vector<Edge> canon;
  canon.reserve(edges.size());
  std::size_t self_loops = 0;
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n)
      throw DataError("edge endpoint out of range");
    if (a == b) {
      ++self_loops;
      continue;
    }
    canon.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::sort(canon.begin(), canon.end());
  const auto before = canon.size();
  canon.erase(std::unique(canon.begin(), canon.end()), canon.end());
  if (report) {
    report->self_loops += self_loops;
    report->duplicate_edges += before - canon.size();
  }

  std::vector<std::size_t> deg(n, 0);
  for (auto [a, b] : canon) {
    ++deg[a];
    ++deg[b];
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + deg[i];
  adjacency_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (auto [a, b] : canon) {
    adjacency_[fill[a]++] = b;
    adjacency_[fill[b]++] = a;
  }
  for (std::size_t i = 0; i < n; ++i)
    std::sort(adjacency_.begin() + offsets_[i], adjacency_.begin() + offsets_[i + 1]);
}

bool PopulationGraph::has_edge(NodeId a, NodeId b) const {
  const auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

std::optional<NodeId> PopulationGraph::find(std::string_view label) const {
  const auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<Edge> PopulationGraph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (std::size_t i = 0; i < node_count(); ++i)
    for (NodeId j : neighbors(static_cast<NodeId>(i)))
      if (j > static_cast<NodeId>(i)) out.emplace_back(static_cast<NodeId>(i), j);
  return out;
}

LoadedGraph load_edges(std::istream& in, std::span<const std::string> roster) {
  std::vector<std::string> labels;
  std::unordered_map<std::string, NodeId> index;
  auto intern = [&](const std::string& s) {
    auto [it, fresh] = index.emplace(s, static_cast<NodeId>(labels.size()));
    if (fresh) labels.push_back(s);
    return it->second;
  };

  LoadReport report;
  std::vector<Edge> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = csv::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto fields = csv::split_ws_or_comma(body);
    if (fields.size() != 2)
      throw DataError("edge list line " + std::to_string(lineno) + ": expected 2 labels, got " +
                      std::to_string(fields.size()));
    ++report.edge_lines;
    edges.emplace_back(intern(fields[0]), intern(fields[1]));
  }
  const auto linked = labels.size();
  for (const auto& r : roster) intern(r);
  report.roster_only_nodes = labels.size() - linked;
  if (edges.empty() && labels.empty())
    throw DataError("edge list is empty and no node roster was given");

  PopulationGraph g(std::move(labels), edges, &report);
  return {std::move(g), report};
}

LoadedGraph load_edges(const std::filesystem::path& path, std::span<const std::string> roster) {
  auto in = csv::open_in(path);
  return load_edges(in, roster);
}

void write_edges(std::ostream& out, const PopulationGraph& g) {
  for (auto [a, b] : g.edges()) out << g.label(a) << ' ' << g.label(b) << '\n';
}

AttributeTable::AttributeTable(std::size_t node_count, std::vector<std::string> names)
    : node_count_(node_count), names_(std::move(names)) {
  values_.assign(names_.size(), std::vector<double>(node_count, 0.0));
}

bool AttributeTable::has(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t AttributeTable::index_of(std::string_view name) const {
  const auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw ConfigError("unknown attribute '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

std::span<const double> AttributeTable::column(std::string_view name) const {
  return values_[index_of(name)];
}

std::span<double> AttributeTable::column(std::string_view name) { return values_[index_of(name)]; }

void AttributeTable::add_column(std::string name, std::vector<double> values) {
  if (values.size() != node_count_) throw DataError("attribute column '" + name + "' has wrong length");
  if (has(name)) throw DataError("duplicate attribute '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(values));
}

bool AttributeTable::is_binary(std::string_view name) const {
  const auto col = column(name);
  return std::all_of(col.begin(), col.end(), [](double v) { return v == 0.0 || v == 1.0; });
}

AttributeTable load_attributes(std::istream& in, const PopulationGraph& graph) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!csv::trim(line).empty()) {
      header = csv::split(line);
      break;
    }
  }
  if (header.empty()) throw DataError("attribute file has no header row");
  std::vector<std::string> names(header.begin() + 1, header.end());
  AttributeTable table(graph.node_count(), names);
  std::vector<std::span<double>> cols;
  for (const auto& n : names) cols.push_back(table.column(n));

  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto fields = csv::split(line);
    const std::string where = "attribute file line " + std::to_string(lineno);
    if (fields.size() != header.size())
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields");
    const auto node = graph.find(fields[0]);
    if (!node) throw DataError(where + ": unknown node label '" + fields[0] + "'");
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto& cell = fields[k + 1];
      if (cell.empty() || cell == "NA") continue;
      cols[k][*node] = csv::parse_double(cell, where + ", column '" + names[k] + "'");
    }
  }
  return table;
}

AttributeTable load_attributes(const std::filesystem::path& path, const PopulationGraph& graph) {
  auto in = csv::open_in(path);
  return load_attributes(in, graph);
}

std::vector<std::string> read_attribute_roster(const std::filesystem::path& path) {
  auto in = csv::open_in(path);
  std::vector<std::string> out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (csv::trim(line).empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    out.push_back(csv::split(line).front());
  }
  return out;
}

void write_attributes(std::ostream& out, const PopulationGraph& g, const AttributeTable& attrs) {
  out << "label";
  for (const auto& n : attrs.names()) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    out << g.label(static_cast<NodeId>(i));
    for (std::size_t k = 0; k < attrs.names().size(); ++k) out << ',' << csv::exact(attrs.column(k)[i]);
    out << '\n';
  }
}

Population load_population(const std::filesystem::path& edges, const std::filesystem::path& attrs) {
  const auto roster = read_attribute_roster(attrs);
  auto loaded = load_edges(edges, roster);
  auto table = load_attributes(attrs, loaded.graph);
  return {std::move(loaded.graph), std::move(table), loaded.report};
}

std::vector<double> derived_variable(const PopulationGraph& g, DerivedKind kind) {
  std::vector<double> out(g.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto d = g.degree(static_cast<NodeId>(i));
    out[i] = kind == DerivedKind::degree ? static_cast<double>(d) : (d >= 2 ? 1.0 : 0.0);
  }
  return out;
}

std::vector<double> variable_values(const PopulationGraph& g, const AttributeTable& attrs,
                                    std::string_view name) {
  if (attrs.has(name)) {
    const auto col = attrs.column(name);
    return {col.begin(), col.end()};
  }
  if (name == "degree") return derived_variable(g, DerivedKind::degree);
  if (name == "deg2plus") return derived_variable(g, DerivedKind::deg2plus);
  throw ConfigError("unknown variable '" + std::string(name) + "'");
}

double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace lts
