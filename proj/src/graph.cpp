#include "nettransport/graph.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <unordered_map>
#include <unordered_set>

namespace nettransport {

namespace {

Index find_or_throw(const std::vector<std::string>& ids, std::string_view id) {
  auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw std::out_of_range("unknown id '" + std::string(id) + "'");
  return static_cast<Index>(it - ids.begin());
}

bool is_connected(Index num_nodes, const std::vector<Edge>& edges) {
  std::vector<std::vector<Index>> adjacency(static_cast<std::size_t>(num_nodes));
  for (const auto& e : edges) {
    adjacency[static_cast<std::size_t>(e.init)].push_back(e.ter);
    adjacency[static_cast<std::size_t>(e.ter)].push_back(e.init);
  }
  std::vector<bool> seen(static_cast<std::size_t>(num_nodes), false);
  std::queue<Index> frontier;
  frontier.push(0);
  seen[0] = true;
  Index reached = 1;
  while (!frontier.empty()) {
    Index v = frontier.front();
    frontier.pop();
    for (Index w : adjacency[static_cast<std::size_t>(v)]) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        ++reached;
        frontier.push(w);
      }
    }
  }
  return reached == num_nodes;
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<Index>& rows) {
  Eigen::MatrixXd out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = m.row(rows[i]);
  return out;
}

// Expands a node-by-edge matrix to node-by-boundary-point, taking (nu * B)^-
// with the outer normal of each endpoint.
Eigen::MatrixXd expand_selector(const Eigen::MatrixXd& b) {
  Eigen::MatrixXd s(b.rows(), 2 * b.cols());
  for (Index e = 0; e < b.cols(); ++e) {
    for (Endpoint w : {Endpoint::Start, Endpoint::End}) {
      s.col(Network::boundary_index(e, w)) =
          negative_part((outer_normal(w) * b.col(e)).eval());
    }
  }
  return s;
}

}  // namespace

Index Network::node_index(std::string_view id) const { return find_or_throw(node_ids_, id); }

Index Network::edge_index(std::string_view id) const {
  auto it = std::find_if(edges_.begin(), edges_.end(), [&](const Edge& e) { return e.id == id; });
  if (it == edges_.end()) throw std::out_of_range("unknown edge '" + std::string(id) + "'");
  return static_cast<Index>(it - edges_.begin());
}

Index Network::outer_position(Index v) const {
  auto it = std::find(outer_.begin(), outer_.end(), v);
  return it == outer_.end() ? -1 : static_cast<Index>(it - outer_.begin());
}

Index Network::inner_position(Index v) const {
  auto it = std::find(inner_.begin(), inner_.end(), v);
  return it == inner_.end() ? -1 : static_cast<Index>(it - inner_.begin());
}

BoundaryPoint Network::boundary_point(Index bp) const {
  const Index e = bp / 2;
  const auto w = static_cast<Endpoint>(bp % 2);
  const Edge& ed = edge(e);
  return {e, w, w == Endpoint::Start ? ed.init : ed.ter, outer_normal(w)};
}

Network build_network(std::vector<std::string> nodes, std::vector<EdgeSpec> edges) {
  if (nodes.empty()) throw NetworkError("network has no nodes");
  if (edges.empty()) throw DisconnectedGraph("network has no edges");
  {
    std::unordered_set<std::string> unique(nodes.begin(), nodes.end());
    if (unique.size() != nodes.size()) throw NetworkError("duplicate node id");
  }
  {
    std::unordered_set<std::string> unique;
    for (const auto& e : edges)
      if (!unique.insert(e.id).second) throw NetworkError("duplicate edge id '" + e.id + "'");
  }

  Network net;
  net.node_ids_ = std::move(nodes);
  net.edges_.reserve(edges.size());
  for (auto& spec : edges) {
    Index init = -1;
    Index ter = -1;
    try {
      init = find_or_throw(net.node_ids_, spec.init);
      ter = find_or_throw(net.node_ids_, spec.ter);
    } catch (const std::out_of_range&) {
      throw DanglingEndpoint("edge '" + spec.id + "' references an undeclared node");
    }
    if (init == ter) throw SelfLoop("edge '" + spec.id + "' is a self-loop");
    net.edges_.push_back({std::move(spec.id), init, ter, spec.weight});
  }

  net.degree_.assign(net.node_ids_.size(), 0);
  for (const auto& e : net.edges_) {
    ++net.degree_[static_cast<std::size_t>(e.init)];
    ++net.degree_[static_cast<std::size_t>(e.ter)];
  }
  if (!is_connected(net.num_nodes(), net.edges_))
    throw DisconnectedGraph("network is not connected");

  for (Index v = 0; v < net.num_nodes(); ++v) (net.is_inner(v) ? net.inner_ : net.outer_).push_back(v);

  net.incidence_ = build_incidence(net);
  net.selector_ = expand_selector(net.incidence_.full);
  net.inner_selector_ = rows_of(net.selector_, net.inner_);
  net.outer_selector_ = rows_of(net.selector_, net.outer_);
  return net;
}

IncidenceMatrix build_incidence(const Network& network) {
  IncidenceMatrix inc;
  inc.full = Eigen::MatrixXd::Zero(network.num_nodes(), network.num_edges());
  for (Index e = 0; e < network.num_edges(); ++e) {
    inc.full(network.edge(e).init, e) = 1.0;
    inc.full(network.edge(e).ter, e) = -1.0;
  }
  inc.inner = rows_of(inc.full, network.inner_nodes());
  inc.outer = rows_of(inc.full, network.outer_nodes());
  return inc;
}

std::vector<BoundaryPoint> boundary_points(const Network& network) {
  std::vector<BoundaryPoint> points;
  points.reserve(static_cast<std::size_t>(network.num_boundary_points()));
  for (Index bp = 0; bp < network.num_boundary_points(); ++bp) points.push_back(network.boundary_point(bp));
  return points;
}

Eigen::MatrixXd signed_negative_part(int sign, const Eigen::MatrixXd& m) {
  return negative_part((static_cast<double>(sign) * m).eval());
}

}  // namespace nettransport
