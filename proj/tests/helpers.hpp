#pragma once

#include <memory>
#include <string>

#include "nettransport/io.hpp"
#include "nettransport/scenario.hpp"

namespace testing {

using namespace nettransport;

inline std::string scenario_path(const std::string& name) {
  return std::string(NETTRANSPORT_SCENARIO_DIR) + "/" + name + ".json";
}

inline Scenario shipped(const std::string& name) { return load_scenario(scenario_path(name)); }

inline std::shared_ptr<const Network> y_network() {
  return std::make_shared<const Network>(
      build_network({"v1", "v2", "v3", "v4"}, {{"e1", "v1", "v3"}, {"e2", "v2", "v3"}, {"e3", "v3", "v4"}}));
}

inline std::shared_ptr<const Network> loop_network() {
  return std::make_shared<const Network>(build_network({"v1", "v2"}, {{"e1", "v1", "v2"}, {"e2", "v2", "v1"}}));
}

inline std::shared_ptr<const Network> single_network() {
  return std::make_shared<const Network>(build_network({"v1", "v2"}, {{"e1", "v1", "v2"}}));
}

/// One edge from v1 to v2 with constant fields given as expression strings.
inline Scenario single_edge(const std::string& u, const std::string& rho0, const std::string& inflow, Index cells,
                            double cfl = 0.5, const std::string& c = "0", const std::string& f = "0") {
  Scenario sc;
  sc.network = single_network();
  sc.fields = {{parse(u), Expr::constant(0.0), parse(c), parse(f), parse(rho0)}};
  sc.outer_data = {parse(inflow), Expr::constant(0.0)};
  sc.cells = {cells};
  sc.cfl = cfl;
  return sc;
}

}  // namespace testing
