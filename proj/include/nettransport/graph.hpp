#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace nettransport {

using Index = Eigen::Index;

/// Positive part max(v, 0).
inline double positive_part(double v) { return v > 0.0 ? v : 0.0; }
/// Negative part max(-v, 0); note the result is nonnegative.
inline double negative_part(double v) { return v < 0.0 ? -v : 0.0; }

template <typename Derived>
auto positive_part(const Eigen::MatrixBase<Derived>& m) {
  return m.cwiseMax(typename Derived::Scalar(0));
}

template <typename Derived>
auto negative_part(const Eigen::MatrixBase<Derived>& m) {
  return (-m).cwiseMax(typename Derived::Scalar(0));
}

/// Edge endpoint in the edge's own parameterization x in [0, 1].
enum class Endpoint : int { Start = 0, End = 1 };

/// Outer normal of the unit interval: -1 at x = 0, +1 at x = 1.
constexpr int outer_normal(Endpoint w) { return w == Endpoint::Start ? -1 : 1; }

struct NetworkError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DisconnectedGraph : NetworkError {
  using NetworkError::NetworkError;
};
struct SelfLoop : NetworkError {
  using NetworkError::NetworkError;
};
struct DanglingEndpoint : NetworkError {
  using NetworkError::NetworkError;
};

struct EdgeSpec {
  std::string id;
  std::string init;
  std::string ter;
  double weight = 1.0;
};

struct Edge {
  std::string id;
  Index init;
  Index ter;
  // Carried from the graph tuple; the transport solver never reads it.
  double weight = 1.0;
};

struct BoundaryPoint {
  Index edge;
  Endpoint endpoint;
  Index node;
  int normal;
};

/// Signed node-by-edge incidence matrix with +1 at init(e) and -1 at ter(e).
///
/// With this sign convention the entrywise negative part of nu * B, where nu
/// is the outer normal of the endpoint, is exactly the 0/1 matrix assigning
/// each edge endpoint to the node it touches, and the positive part vanishes.
/// The coupling formulas depend on that selector being nonzero, which pins the
/// convention up to a global sign.
struct IncidenceMatrix {
  Eigen::MatrixXd full;   // m x n
  Eigen::MatrixXd inner;  // k x n, rows of inner nodes in ascending node order
  Eigen::MatrixXd outer;  // (m - k) x n
};

/// Connected directed graph whose edges are each parameterized over [0, 1].
///
/// Boundary points are indexed 2 * e + w for edge e and endpoint w, which is
/// the layout of every boundary vector in the library. Immutable after
/// construction.
class Network {
 public:
  Index num_nodes() const { return static_cast<Index>(node_ids_.size()); }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }
  Index num_inner() const { return static_cast<Index>(inner_.size()); }
  Index num_outer() const { return static_cast<Index>(outer_.size()); }
  Index num_boundary_points() const { return 2 * num_edges(); }

  const std::vector<std::string>& node_ids() const { return node_ids_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(Index e) const { return edges_[static_cast<std::size_t>(e)]; }
  const std::vector<Index>& inner_nodes() const { return inner_; }
  const std::vector<Index>& outer_nodes() const { return outer_; }

  Index degree(Index v) const { return degree_[static_cast<std::size_t>(v)]; }
  bool is_inner(Index v) const { return degree(v) > 1; }

  /// Throws std::out_of_range for unknown ids.
  Index node_index(std::string_view id) const;
  Index edge_index(std::string_view id) const;

  /// Position of an outer node within outer_nodes(), or -1.
  Index outer_position(Index v) const;
  /// Position of an inner node within inner_nodes(), or -1.
  Index inner_position(Index v) const;

  static constexpr Index boundary_index(Index e, Endpoint w) {
    return 2 * e + static_cast<Index>(w);
  }
  BoundaryPoint boundary_point(Index bp) const;

  const IncidenceMatrix& incidence() const { return incidence_; }

  /// (nu B)^- expanded to boundary points: m x 2n, one unit entry per column.
  const Eigen::MatrixXd& node_selector() const { return selector_; }
  const Eigen::MatrixXd& inner_selector() const { return inner_selector_; }
  const Eigen::MatrixXd& outer_selector() const { return outer_selector_; }

 private:
  friend Network build_network(std::vector<std::string>, std::vector<EdgeSpec>);

  std::vector<std::string> node_ids_;
  std::vector<Edge> edges_;
  std::vector<Index> degree_;
  std::vector<Index> inner_;
  std::vector<Index> outer_;
  IncidenceMatrix incidence_;
  Eigen::MatrixXd selector_;
  Eigen::MatrixXd inner_selector_;
  Eigen::MatrixXd outer_selector_;
};

/// Validates and builds a network. Throws DanglingEndpoint, SelfLoop or
/// DisconnectedGraph (all NetworkError); duplicate ids are a plain NetworkError.
Network build_network(std::vector<std::string> nodes, std::vector<EdgeSpec> edges);

IncidenceMatrix build_incidence(const Network& network);

/// All 2n boundary points in boundary-index order.
std::vector<BoundaryPoint> boundary_points(const Network& network);

/// Entrywise (s * M)^- for a sign s in {-1, +1}; the selector algebra is
/// expressed with it.
Eigen::MatrixXd signed_negative_part(int sign, const Eigen::MatrixXd& m);

}  // namespace nettransport
