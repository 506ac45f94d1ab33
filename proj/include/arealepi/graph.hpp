#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace arealepi {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using OrderMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Region {
  std::string id;
  std::string name;

  bool operator==(const Region&) const = default;
};

/// Ordered set of regions. The position of a region is its row in every
/// region-indexed matrix of a study.
class RegionSet {
 public:
  RegionSet() = default;
  explicit RegionSet(std::vector<Region> regions);

  std::size_t size() const { return regions_.size(); }
  bool empty() const { return regions_.empty(); }
  const Region& operator[](std::size_t i) const { return regions_[i]; }
  const std::vector<Region>& regions() const { return regions_; }

  /// Throws UnknownRegion.
  std::size_t index_of(const std::string& id) const;
  std::optional<std::size_t> find(const std::string& id) const;

  bool operator==(const RegionSet& other) const { return regions_ == other.regions_; }

 private:
  std::vector<Region> regions_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Symmetric boolean border relation with an empty diagonal.
class AdjacencyMatrix {
 public:
  explicit AdjacencyMatrix(std::size_t n = 0) : n_(n), entries_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool operator()(std::size_t a, std::size_t b) const { return entries_[a * n_ + b] != 0; }
  std::size_t degree(std::size_t a) const;
  std::size_t edge_count() const;

  void connect(std::size_t a, std::size_t b) {
    entries_[a * n_ + b] = 1;
    entries_[b * n_ + a] = 1;
  }

 private:
  std::size_t n_;
  std::vector<std::uint8_t> entries_;
};

/// Neighbour order of pairs with no connecting path.
inline constexpr int kUnreachable = -1;

/// Spatial weights of the between-region component.
///
/// `entries(r, s)` is the weight with which source region `s` feeds receiving
/// region `r` (the w_{s,r} coefficient). The support is symmetric; when
/// `normalized` is set every receiving row with at least one neighbour sums
/// to one, so the weighted sum is an average over neighbours.
struct WeightMatrix {
  RowMatrix entries;
  int max_order = 2;
  bool normalized = true;

  std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }
};

using BorderList = std::vector<std::pair<std::string, std::string>>;

/// Throws UnknownRegion or SelfLoop. Duplicate pairs are accepted.
AdjacencyMatrix build_adjacency(const RegionSet& regions, const BorderList& borders);

/// Shortest-path length in the border graph; 0 on the diagonal and
/// kUnreachable between components.
OrderMatrix neighbor_order(const AdjacencyMatrix& adj);

WeightMatrix build_weights(const OrderMatrix& orders, int max_order = 2, bool normalize = true);

/// Parses a `from,to` border CSV.
BorderList read_borders(std::istream& in);

struct GraphStats {
  std::size_t regions = 0;
  std::size_t borders = 0;
  std::size_t components = 0;
  std::vector<std::string> isolated;
  /// pairs_by_order[k] counts unordered pairs at order k (k >= 1).
  std::vector<std::size_t> pairs_by_order;
  std::size_t unreachable_pairs = 0;
  int max_finite_order = 0;
};

GraphStats graph_stats(const RegionSet& regions, const AdjacencyMatrix& adj, const OrderMatrix& orders);

}  // namespace arealepi
