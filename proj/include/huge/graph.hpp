#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "huge/core.hpp"

namespace huge {

/// Undirected attributed graph in CSR form. Each undirected edge is stored in
/// both directions, neighbor lists are sorted, and there are no self-loops or
/// duplicate edges. Immutable once built.
class AttributedGraph {
 public:
  AttributedGraph() = default;

  /// Builds from an undirected edge list over dense ids 0..n-1 where
  /// n = attributes.rows(). Duplicates (in either direction) are merged and
  /// self-loops dropped; the number dropped is reported by self_loops_dropped().
  static AttributedGraph from_edges(std::span<const std::pair<Index, Index>> edges,
                                    Matrix attributes,
                                    std::optional<std::vector<int>> labels = std::nullopt,
                                    std::vector<std::int64_t> node_ids = {});

  Index num_nodes() const noexcept { return static_cast<Index>(row_offsets_.size()) - 1; }
  Index num_edges() const noexcept { return static_cast<Index>(col_indices_.size()) / 2; }
  Index dim() const noexcept { return attributes_.cols(); }

  const std::vector<Index>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<Index>& col_indices() const noexcept { return col_indices_; }
  const Matrix& attributes() const noexcept { return attributes_; }
  auto attribute_row(Index i) const { return attributes_.row(i); }
  const std::optional<std::vector<int>>& labels() const noexcept { return labels_; }
  /// Original id of each dense node index (the densification map).
  const std::vector<std::int64_t>& node_ids() const noexcept { return node_ids_; }
  Index degree(Index i) const { return row_offsets_[i + 1] - row_offsets_[i]; }
  std::size_t self_loops_dropped() const noexcept { return self_loops_dropped_; }

  /// Throws ValidationError if any structural or attribute invariant fails.
  void validate() const;

 private:
  std::vector<Index> row_offsets_{0};
  std::vector<Index> col_indices_;
  Matrix attributes_;
  std::optional<std::vector<int>> labels_;
  std::vector<std::int64_t> node_ids_;
  std::size_t self_loops_dropped_ = 0;
};

/// Sorted neighbor list of node i. Throws std::out_of_range on a bad index.
std::span<const Index> neighbors(const AttributedGraph& g, Index i);

/// One-hop closure of a node batch. nodes[0..batch_size) is the batch in the
/// given order, followed by distinct neighbors in first-seen order. The local
/// CSR keeps only edges with at least one batch endpoint, in local ids.
struct Subgraph {
  std::vector<Index> nodes;
  Index batch_size = 0;
  std::vector<Index> row_offsets;
  std::vector<Index> col_indices;

  Index size() const noexcept { return static_cast<Index>(nodes.size()); }
  std::span<const Index> neighbors(Index local) const {
    return {col_indices.data() + row_offsets[local],
            static_cast<std::size_t>(row_offsets[local + 1] - row_offsets[local])};
  }
};

Subgraph neighbor_closure_subgraph(const AttributedGraph& g, std::span<const Index> batch);

struct GraphFiles {
  std::filesystem::path edges;
  std::filesystem::path attributes;
  std::optional<std::filesystem::path> labels;
};

/// Reads the interchange format: whitespace-separated "src dst" lines with '#'
/// comments, a headerless numeric CSV, and one 0/1 label per line.
///
/// Node ids: if every id lies in [0, rows) the ids are taken as attribute row
/// indices (nodes absent from the edge list are isolated). Otherwise the
/// distinct ids are densified in ascending order and their count must equal
/// the attribute row count.
AttributedGraph load_graph(const GraphFiles& files);

/// One 0/1 label per line; blank lines are skipped.
std::vector<int> load_labels(const std::filesystem::path& path);

/// Writes each undirected edge once as "src dst" using original node ids.
void write_edge_list(const AttributedGraph& g, const std::filesystem::path& path);
void write_attributes(const AttributedGraph& g, const std::filesystem::path& path);
void write_labels(const AttributedGraph& g, const std::filesystem::path& path);

}  // namespace huge
