#pragma once

#include <functional>
#include <vector>

#include "ccy/errors.hpp"
#include "ccy/util.hpp"

namespace ccy {

// Lattice shortest-path machinery for conformal metrics ds = sqrt(f)|dw| on a
// square box. The graph is built once; Dijkstra runs answer distance queries.
// Edge weights are segment integrals of sqrt(f) with dyadic grading towards
// the endpoints, so edges ending at integrable singular points stay finite.
class GridGeodesic2D {
 public:
  using Density = std::function<double(cplx)>;  // f, may blow up pointwise

  GridGeodesic2D(cplx center, double half_width, int cells, int connectivity,
                 Density density, int workers = 1);

  int node_index(cplx p, double snap_tol) const;  // GridError when off-lattice
  cplx node_point(int idx) const;

  // Single-source distances to every node.
  std::vector<double> distances_from(int source) const;
  double distance(cplx p, cplx q, double snap_tol) const;

  // Distances for an alternative density on the same topology (the weights
  // are recomputed, the node layout is shared). Used to difference two
  // metrics on identical paths.
  std::vector<double> reweighted_distances_from(int source,
                                                const Density& density) const;

  int nodes_per_axis() const { return n_ + 1; }
  double spacing() const { return h_; }

 private:
  double edge_weight(cplx p, cplx q, const Density& f) const;
  std::vector<double> run_dijkstra(int source,
                                   const std::vector<double>& weights) const;
  void build_weights(const Density& f, std::vector<double>& out,
                     int workers) const;

  cplx center_;
  double half_width_;
  int n_;
  double h_;
  std::vector<std::pair<int, int>> offsets_;
  std::vector<std::pair<int, int>> edges_;  // node index pairs
  std::vector<double> weights_;
  std::vector<std::vector<std::pair<int, int>>> adjacency_;  // (edge, other)
  Density density_;
};

}  // namespace ccy
