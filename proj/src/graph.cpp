#include "huge/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string_view>
#include <unordered_map>

namespace huge {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(std::string_view token, T& out) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end && !token.empty();
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  return in;
}

std::vector<std::pair<std::int64_t, std::int64_t>> read_edge_list(
    const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = line;
    if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;

    std::int64_t ids[2];
    int count = 0;
    std::size_t pos = 0;
    while (pos < view.size()) {
      const auto start = view.find_first_not_of(" \t", pos);
      if (start == std::string_view::npos) break;
      const auto stop = std::min(view.find_first_of(" \t", start), view.size());
      if (count == 2 || !parse_number(view.substr(start, stop - start), ids[count])) {
        throw ParseError("malformed edge line in " + path.string(), lineno);
      }
      ++count;
      pos = stop;
    }
    if (count != 2) throw ParseError("malformed edge line in " + path.string(), lineno);
    edges.emplace_back(ids[0], ids[1]);
  }
  return edges;
}

Matrix read_attributes(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    Index row_cols = 0;
    std::size_t pos = 0;
    while (true) {
      const auto comma = view.find(',', pos);
      const auto token = view.substr(pos, comma == std::string_view::npos ? view.npos : comma - pos);
      double v = 0.0;
      if (!parse_number(token, v)) {
        throw ParseError("malformed attribute value in " + path.string(), lineno);
      }
      if (!std::isfinite(v)) {
        throw ValidationError("non-finite attribute at line " + std::to_string(lineno) + " of " +
                              path.string());
      }
      values.push_back(v);
      ++row_cols;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (cols < 0) cols = row_cols;
    if (row_cols != cols) {
      throw ParseError("attribute row has " + std::to_string(row_cols) + " columns, expected " +
                           std::to_string(cols),
                       lineno);
    }
    ++rows;
  }
  if (rows == 0) throw ShapeError("attribute file " + path.string() + " is empty");
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  std::vector<int> labels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    int v = 0;
    if (!parse_number(view, v)) throw ParseError("malformed label in " + path.string(), lineno);
    if (v != 0 && v != 1) {
      throw ValidationError("label must be 0 or 1, got " + std::string(view) + " at line " +
                            std::to_string(lineno));
    }
    labels.push_back(v);
  }
  return labels;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

AttributedGraph AttributedGraph::from_edges(std::span<const std::pair<Index, Index>> edges,
                                            Matrix attributes,
                                            std::optional<std::vector<int>> labels,
                                            std::vector<std::int64_t> node_ids) {
  AttributedGraph g;
  const Index n = attributes.rows();
  if (!node_ids.empty() && static_cast<Index>(node_ids.size()) != n) {
    throw ShapeError("node id map length does not match attribute rows");
  }
  if (node_ids.empty()) {
    node_ids.resize(n);
    for (Index i = 0; i < n; ++i) node_ids[i] = i;
  }
  if (labels && static_cast<Index>(labels->size()) != n) {
    throw ShapeError("label count " + std::to_string(labels->size()) + " != node count " +
                     std::to_string(n));
  }

  std::vector<std::pair<Index, Index>> directed;
  directed.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw ValidationError("edge endpoint out of range: " + std::to_string(u) + " " +
                            std::to_string(v));
    }
    if (u == v) {
      ++g.self_loops_dropped_;
      continue;
    }
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  g.row_offsets_.assign(n + 1, 0);
  for (auto [u, v] : directed) ++g.row_offsets_[u + 1];
  for (Index i = 0; i < n; ++i) g.row_offsets_[i + 1] += g.row_offsets_[i];
  g.col_indices_.resize(directed.size());
  for (std::size_t k = 0; k < directed.size(); ++k) g.col_indices_[k] = directed[k].second;

  g.attributes_ = std::move(attributes);
  g.labels_ = std::move(labels);
  g.node_ids_ = std::move(node_ids);
  g.validate();
  return g;
}

void AttributedGraph::validate() const {
  const Index n = num_nodes();
  if (row_offsets_.empty() || row_offsets_.front() != 0 ||
      row_offsets_.back() != static_cast<Index>(col_indices_.size())) {
    throw ValidationError("row_offsets inconsistent with col_indices");
  }
  if (attributes_.rows() != n) throw ShapeError("attribute rows != node count");
  if (!attributes_.allFinite()) throw ValidationError("attributes contain NaN or Inf");
  for (Index i = 0; i < n; ++i) {
    if (row_offsets_[i + 1] < row_offsets_[i]) throw ValidationError("row_offsets decreasing");
    const auto nbrs = neighbors(*this, i);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const Index j = nbrs[k];
      if (j < 0 || j >= n) throw ValidationError("column index out of range");
      if (j == i) throw ValidationError("self-loop at node " + std::to_string(i));
      if (k > 0 && nbrs[k - 1] >= j) throw ValidationError("neighbor list unsorted or duplicated");
      const auto back = neighbors(*this, j);
      if (!std::binary_search(back.begin(), back.end(), i)) {
        throw ValidationError("adjacency not symmetric");
      }
    }
  }
  if (labels_) {
    for (int y : *labels_) {
      if (y != 0 && y != 1) throw ValidationError("label outside {0,1}");
    }
  }
}

std::span<const Index> neighbors(const AttributedGraph& g, Index i) {
  if (i < 0 || i >= g.num_nodes()) {
    throw std::out_of_range("node index " + std::to_string(i) + " out of range");
  }
  const auto& off = g.row_offsets();
  return {g.col_indices().data() + off[i], static_cast<std::size_t>(off[i + 1] - off[i])};
}

Subgraph neighbor_closure_subgraph(const AttributedGraph& g, std::span<const Index> batch) {
  if (batch.empty()) throw ValidationError("empty batch");
  const Index n = g.num_nodes();
  Subgraph sub;
  sub.batch_size = static_cast<Index>(batch.size());

  std::unordered_map<Index, Index> local;
  local.reserve(batch.size() * 4);
  for (Index v : batch) {
    if (v < 0 || v >= n) throw std::out_of_range("batch node out of range");
    if (!local.emplace(v, static_cast<Index>(sub.nodes.size())).second) {
      throw ValidationError("duplicate node in batch");
    }
    sub.nodes.push_back(v);
  }
  for (Index v : batch) {
    for (Index u : neighbors(g, v)) {
      if (local.emplace(u, static_cast<Index>(sub.nodes.size())).second) sub.nodes.push_back(u);
    }
  }

  // Batch rows keep their full neighborhood; neighbor-only rows see batch nodes only.
  std::vector<std::vector<Index>> adj(sub.nodes.size());
  for (Index p = 0; p < sub.batch_size; ++p) {
    for (Index u : neighbors(g, sub.nodes[p])) {
      const Index q = local.at(u);
      adj[p].push_back(q);
      if (q >= sub.batch_size) adj[q].push_back(p);
    }
  }
  sub.row_offsets.assign(sub.nodes.size() + 1, 0);
  for (std::size_t p = 0; p < adj.size(); ++p) {
    std::sort(adj[p].begin(), adj[p].end());
    sub.row_offsets[p + 1] = sub.row_offsets[p] + static_cast<Index>(adj[p].size());
    sub.col_indices.insert(sub.col_indices.end(), adj[p].begin(), adj[p].end());
  }
  return sub;
}

std::vector<int> load_labels(const std::filesystem::path& path) { return read_labels(path); }

AttributedGraph load_graph(const GraphFiles& files) {
  const auto raw_edges = read_edge_list(files.edges);
  Matrix attributes = read_attributes(files.attributes);
  const Index rows = attributes.rows();

  std::optional<std::vector<int>> labels;
  if (files.labels) {
    labels = read_labels(*files.labels);
    if (static_cast<Index>(labels->size()) != rows) {
      throw ShapeError("label count " + std::to_string(labels->size()) +
                       " != attribute rows " + std::to_string(rows));
    }
  }

  bool dense = true;
  for (auto [u, v] : raw_edges) {
    if (u < 0 || v < 0 || u >= rows || v >= rows) {
      dense = false;
      break;
    }
  }

  std::vector<std::pair<Index, Index>> edges;
  edges.reserve(raw_edges.size());
  std::vector<std::int64_t> ids;
  if (dense) {
    for (auto [u, v] : raw_edges) edges.emplace_back(u, v);
  } else {
    for (auto [u, v] : raw_edges) {
      ids.push_back(u);
      ids.push_back(v);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (static_cast<Index>(ids.size()) != rows) {
      throw ShapeError("edge list has " + std::to_string(ids.size()) +
                       " distinct node ids but attribute file has " + std::to_string(rows) +
                       " rows");
    }
    auto dense_id = [&](std::int64_t id) {
      return static_cast<Index>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };
    for (auto [u, v] : raw_edges) edges.emplace_back(dense_id(u), dense_id(v));
  }

  auto g = AttributedGraph::from_edges(edges, std::move(attributes), std::move(labels),
                                       std::move(ids));
  if (g.self_loops_dropped() > 0) {
    std::cerr << "warning: dropped " << g.self_loops_dropped() << " self-loop(s) from "
              << files.edges.string() << "\n";
  }
  return g;
}

void write_edge_list(const AttributedGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  const auto& ids = g.node_ids();
  for (Index i = 0; i < g.num_nodes(); ++i) {
    for (Index j : neighbors(g, i)) {
      if (i < j) out << ids[i] << ' ' << ids[j] << '\n';
    }
  }
}

void write_attributes(const AttributedGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  const Matrix& x = g.attributes();
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index k = 0; k < x.cols(); ++k) {
      if (k) out << ',';
      out << format_double(x(i, k));
    }
    out << '\n';
  }
}

void write_labels(const AttributedGraph& g, const std::filesystem::path& path) {
  if (!g.labels()) throw ValidationError("graph has no labels to write");
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (int y : *g.labels()) out << y << '\n';
}

}  // namespace huge
