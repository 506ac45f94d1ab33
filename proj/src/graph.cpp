#include "arealepi/graph.hpp"

#include <deque>

#include "arealepi/csv.hpp"
#include "arealepi/error.hpp"

namespace arealepi {

RegionSet::RegionSet(std::vector<Region> regions) : regions_(std::move(regions)) {
  index_.reserve(regions_.size());
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const auto& id = regions_[i].id;
    if (id.empty()) throw Error(ErrorKind::InvalidInput, "empty region id at position " + std::to_string(i));
    if (!index_.emplace(id, i).second) throw Error(ErrorKind::InvalidInput, "duplicate region id '" + id + "'");
    if (regions_[i].name.empty()) regions_[i].name = id;
  }
}

std::size_t RegionSet::index_of(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorKind::UnknownRegion, "region '" + id + "' is not in the region set");
  return it->second;
}

std::optional<std::size_t> RegionSet::find(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t AdjacencyMatrix::degree(std::size_t a) const {
  std::size_t d = 0;
  for (std::size_t b = 0; b < n_; ++b) d += entries_[a * n_ + b];
  return d;
}

std::size_t AdjacencyMatrix::edge_count() const {
  std::size_t e = 0;
  for (std::size_t a = 0; a < n_; ++a) e += degree(a);
  return e / 2;
}

AdjacencyMatrix build_adjacency(const RegionSet& regions, const BorderList& borders) {
  AdjacencyMatrix adj(regions.size());
  for (const auto& [from, to] : borders) {
    const auto a = regions.index_of(from);
    const auto b = regions.index_of(to);
    if (a == b) throw Error(ErrorKind::SelfLoop, "border (" + from + "," + to + ") joins a region to itself");
    adj.connect(a, b);
  }
  return adj;
}

OrderMatrix neighbor_order(const AdjacencyMatrix& adj) {
  const auto n = adj.size();
  OrderMatrix order = OrderMatrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), kUnreachable);
  std::deque<std::size_t> queue;
  for (std::size_t src = 0; src < n; ++src) {
    order(src, src) = 0;
    queue.assign(1, src);
    while (!queue.empty()) {
      const auto u = queue.front();
      queue.pop_front();
      for (std::size_t v = 0; v < n; ++v) {
        if (adj(u, v) && order(src, v) == kUnreachable) {
          order(src, v) = order(src, u) + 1;
          queue.push_back(v);
        }
      }
    }
  }
  return order;
}

WeightMatrix build_weights(const OrderMatrix& orders, int max_order, bool normalize) {
  if (max_order < 1) throw Error(ErrorKind::InvalidInput, "max_order must be >= 1");
  if (orders.rows() != orders.cols()) throw Error(ErrorKind::DimensionMismatch, "order matrix is not square");
  WeightMatrix w;
  w.max_order = max_order;
  w.normalized = normalize;
  w.entries = RowMatrix::Zero(orders.rows(), orders.cols());
  for (Eigen::Index r = 0; r < orders.rows(); ++r) {
    for (Eigen::Index s = 0; s < orders.cols(); ++s) {
      const int k = orders(r, s);
      if (k >= 1 && k <= max_order) w.entries(r, s) = 1.0;
    }
    if (normalize) {
      const double total = w.entries.row(r).sum();
      if (total > 0.0) w.entries.row(r) /= total;
    }
  }
  return w;
}

BorderList read_borders(std::istream& in) {
  csv::Reader reader(in, {"from", "to"});
  BorderList out;
  csv::Row row;
  while (reader.next(row)) out.emplace_back(row.fields[0], row.fields[1]);
  return out;
}

GraphStats graph_stats(const RegionSet& regions, const AdjacencyMatrix& adj, const OrderMatrix& orders) {
  GraphStats stats;
  const auto n = adj.size();
  stats.regions = n;
  stats.borders = adj.edge_count();
  std::vector<bool> seen(n, false);
  for (std::size_t a = 0; a < n; ++a) {
    if (adj.degree(a) == 0) stats.isolated.push_back(regions[a].id);
    if (!seen[a]) {
      ++stats.components;
      for (std::size_t b = 0; b < n; ++b) {
        if (orders(a, b) != kUnreachable) seen[b] = true;
      }
    }
    for (std::size_t b = a + 1; b < n; ++b) {
      const int k = orders(a, b);
      if (k == kUnreachable) {
        ++stats.unreachable_pairs;
        continue;
      }
      if (stats.pairs_by_order.size() <= static_cast<std::size_t>(k)) stats.pairs_by_order.resize(k + 1, 0);
      ++stats.pairs_by_order[k];
      stats.max_finite_order = std::max(stats.max_finite_order, k);
    }
  }
  return stats;
}

}  // namespace arealepi
