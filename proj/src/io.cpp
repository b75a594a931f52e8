#include "nettransport/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nettransport/version.hpp"

namespace nettransport {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw InputError(path + ": " + message);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing");
  return *it;
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected a string");
  return v.get<std::string>();
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected a number");
  return v.get<double>();
}

Expr as_expr(const json& v, const std::string& path) {
  // Bare numbers are accepted as constant expressions.
  if (v.is_number()) return Expr::constant(v.get<double>());
  try {
    return parse(as_string(v, path));
  } catch (const ParseError& e) {
    fail(path, e.what());
  }
}

Expr optional_expr(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  return it == obj.end() ? Expr::constant(0.0) : as_expr(*it, path + "." + key);
}

std::vector<double> number_list(const json& obj, const std::string& key, const std::string& path,
                                std::vector<double> fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_array()) fail(path + "." + key, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < it->size(); ++i)
    out.push_back(as_number((*it)[i], path + "." + key + "[" + std::to_string(i) + "]"));
  return out;
}

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, column = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

const char* endpoint_name(Endpoint w) { return w == Endpoint::Start ? "start" : "end"; }

}  // namespace

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw InputError("JSON syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                     ": " + e.what());
  }
  if (!doc.is_object()) fail("<root>", "expected an object");

  const json& net = require(doc, "network", "<root>");
  const json& nodes = require(net, "nodes", "network");
  if (!nodes.is_array()) fail("network.nodes", "expected an array of node ids");
  std::vector<std::string> node_ids;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    node_ids.push_back(as_string(nodes[i], "network.nodes[" + std::to_string(i) + "]"));

  const json& edges = require(net, "edges", "network");
  if (!edges.is_array() || edges.empty()) fail("network.edges", "expected a non-empty array");
  std::vector<EdgeSpec> specs;
  Scenario sc;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "network.edges[" + std::to_string(i) + "]";
    const json& e = edges[i];
    specs.push_back({as_string(require(e, "id", path), path + ".id"), as_string(require(e, "init", path), path + ".init"),
                     as_string(require(e, "ter", path), path + ".ter")});
    const json& cells = require(e, "cells", path);
    if (!cells.is_number_integer() || cells.get<long long>() < 1) fail(path + ".cells", "expected a positive integer");
    sc.cells.push_back(static_cast<Index>(cells.get<long long>()));
    sc.fields.push_back({as_expr(require(e, "u", path), path + ".u"), as_expr(require(e, "u_x", path), path + ".u_x"),
                         optional_expr(e, "c", path), optional_expr(e, "f", path),
                         as_expr(require(e, "rho0", path), path + ".rho0")});
  }
  try {
    sc.network = std::make_shared<const Network>(build_network(node_ids, specs));
  } catch (const NetworkError& e) {
    fail("network", e.what());
  }

  // boundary: exactly the outer nodes, each an expression of t.
  const Network& network = *sc.network;
  auto bit = doc.find("boundary");
  const json boundary = bit == doc.end() ? json::object() : *bit;
  if (!boundary.is_object()) fail("boundary", "expected an object keyed by outer node id");
  for (const auto& [key, value] : boundary.items()) {
    Index v = -1;
    try {
      v = network.node_index(key);
    } catch (const std::exception&) {
      fail("boundary." + key, "unknown node");
    }
    if (network.is_inner(v)) fail("boundary." + key, "node '" + key + "' is an inner node and takes no boundary data");
  }
  for (Index v : network.outer_nodes()) {
    const std::string& id = network.node_ids()[static_cast<std::size_t>(v)];
    auto it = boundary.find(id);
    if (it == boundary.end()) fail("boundary." + id, "missing data for outer node '" + id + "'");
    Expr data = as_expr(*it, "boundary." + id);
    if (data.depends_on_position()) fail("boundary." + id, "must be an expression of t only");
    sc.outer_data.push_back(std::move(data));
  }

  auto sit = doc.find("sim");
  const json sim = sit == doc.end() ? json::object() : *sit;
  if (!sim.is_object()) fail("sim", "expected an object");
  if (auto it = sim.find("T"); it != sim.end()) sc.horizon = as_number(*it, "sim.T");
  if (auto it = sim.find("cfl"); it != sim.end()) sc.cfl = as_number(*it, "sim.cfl");
  sc.snapshots = number_list(sim, "snapshots", "sim", {});
  sc.p_norms = number_list(sim, "p_norms", "sim", {1.0});
  if (auto it = sim.find("coupling"); it != sim.end()) {
    const std::string mode = as_string(*it, "sim.coupling");
    if (mode == "mixing") sc.coupling = CouplingMode::Mixing;
    else if (mode == "zero-g") sc.coupling = CouplingMode::ZeroG;
    else fail("sim.coupling", "expected \"mixing\" or \"zero-g\", got \"" + mode + "\"");
  }
  if (sim.contains("weights")) {
    const std::vector<double> w = number_list(sim, "weights", "sim", {});
    sc.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Index>(w.size()));
  }
  try {
    validate(sc);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }

  const DerivativeAudit audit = audit_velocity_derivative(sc, kAuditSeed);
  if (audit.worst_relative_error > 1e-6)
    fail("network.edges[" + std::to_string(audit.worst_edge) + "].u_x",
         "does not match the x-derivative of u (relative error " + format_number(audit.worst_relative_error) + ")");
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) { return parse_scenario(read_file(path)); }

json scenario_to_json(const Scenario& sc) {
  const Network& net = *sc.network;
  json doc;
  doc["network"]["nodes"] = net.node_ids();
  json edges = json::array();
  for (Index e = 0; e < net.num_edges(); ++e) {
    const Edge& edge = net.edge(e);
    const EdgeFields& f = sc.fields[static_cast<std::size_t>(e)];
    edges.push_back({{"id", edge.id},
                     {"init", net.node_ids()[static_cast<std::size_t>(edge.init)]},
                     {"ter", net.node_ids()[static_cast<std::size_t>(edge.ter)]},
                     {"cells", sc.cells[static_cast<std::size_t>(e)]},
                     {"u", f.u.to_string()},
                     {"u_x", f.u_x.to_string()},
                     {"c", f.c.to_string()},
                     {"f", f.f.to_string()},
                     {"rho0", f.rho0.to_string()}});
  }
  doc["network"]["edges"] = edges;
  doc["boundary"] = json::object();
  for (Index k = 0; k < net.num_outer(); ++k)
    doc["boundary"][net.node_ids()[static_cast<std::size_t>(net.outer_nodes()[static_cast<std::size_t>(k)])]] =
        sc.outer_data[static_cast<std::size_t>(k)].to_string();
  json sim = {{"T", sc.horizon},
              {"cfl", sc.cfl},
              {"snapshots", sc.snapshots},
              {"p_norms", sc.p_norms},
              {"coupling", sc.coupling == CouplingMode::Mixing ? "mixing" : "zero-g"}};
  if (sc.weights) sim["weights"] = std::vector<double>(sc.weights->data(), sc.weights->data() + sc.weights->size());
  doc["sim"] = sim;
  return doc;
}

MassDiagnostics mass_diagnostics(const Scenario& scenario, const SolutionField& solution) {
  const Network& net = *scenario.network;
  const TimeGrid& time = solution.grid.time;
  const Index levels = solution.levels();
  MassDiagnostics d{Eigen::VectorXd(levels), Eigen::VectorXd(levels), Eigen::VectorXd(levels),
                    Eigen::VectorXd::Zero(levels)};
  for (Index n = 0; n < levels; ++n) {
    d.mass(n) = solution.mass(n);
    const double t = time.time(n);
    double inflow = 0.0;
    for (Index bp = 0; bp < net.num_boundary_points(); ++bp)
      if (!net.is_inner(net.boundary_point(bp).node)) inflow -= solution.trace.flux(n, bp) * solution.trace.gamma(n, bp);
    d.outer_net_inflow(n) = inflow;
    double source = 0.0;
    for (Index e = 0; e < net.num_edges(); ++e) {
      const EdgeFields& f = scenario.fields[static_cast<std::size_t>(e)];
      const Eigen::VectorXd xc = solution.grid.space.centers(e);
      double s = 0.0;
      for (Index i = 0; i < xc.size(); ++i)
        s += f.f(t, xc(i)) - f.c(t, xc(i)) * solution.density[static_cast<std::size_t>(e)](n, i);
      source += s * solution.grid.space.dx(e);
    }
    d.source(n) = source;
  }
  for (Index n = 0; n + 1 < levels; ++n) {
    const double dt = time.dt();
    d.residual(n) = d.mass(n + 1) - d.mass(n) - dt * (d.outer_net_inflow(n) + d.source(n));
  }
  return d;
}

void write_results(const ResultBundle& bundle, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Scenario& sc = bundle.scenario;
  const SolutionField& sol = bundle.solution;
  const Network& net = *sc.network;
  const TimeGrid& time = sol.grid.time;

  std::string snap = "edge,cell,x,t,rho\n";
  for (Index n : sol.snapshot_levels)
    for (Index e = 0; e < net.num_edges(); ++e) {
      const Eigen::VectorXd xc = sol.grid.space.centers(e);
      for (Index i = 0; i < xc.size(); ++i)
        snap += net.edge(e).id + "," + std::to_string(i) + "," + format_number(xc(i)) + "," +
                format_number(time.time(n)) + "," + format_number(sol.density[static_cast<std::size_t>(e)](n, i)) +
                "\n";
    }
  write_file(out_dir / "snapshots.csv", snap);

  std::string traces = "edge,endpoint,t,gamma_rho,nu_u\n";
  for (Index n = 0; n < sol.levels(); ++n)
    for (Index e = 0; e < net.num_edges(); ++e)
      for (Endpoint w : {Endpoint::Start, Endpoint::End}) {
        const Index bp = Network::boundary_index(e, w);
        traces += net.edge(e).id + "," + endpoint_name(w) + "," + format_number(time.time(n)) + "," +
                  format_number(sol.trace.gamma(n, bp)) + "," + format_number(sol.trace.flux(n, bp)) + "\n";
      }
  write_file(out_dir / "traces.csv", traces);

  const MassDiagnostics diag = mass_diagnostics(sc, sol);
  std::string dcsv = "level,t,mass,outer_net_inflow,source,conservation_residual\n";
  for (Index n = 0; n < sol.levels(); ++n)
    dcsv += std::to_string(n) + "," + format_number(time.time(n)) + "," + format_number(diag.mass(n)) + "," +
            format_number(diag.outer_net_inflow(n)) + "," + format_number(diag.source(n)) + "," +
            format_number(diag.residual(n)) + "\n";
  write_file(out_dir / "diagnostics.csv", dcsv);

  if (bundle.envelope) {
    const BoundEnvelope& env = *bundle.envelope;
    std::string ecsv = "t,upper,lower\n";
    for (Index n = 0; n < env.grid.levels(); ++n)
      ecsv += format_number(env.grid.time(n)) + "," + format_number(env.upper(n)) + "," +
              (env.rho_min ? format_number(env.lower(n)) : std::string()) + "\n";
    write_file(out_dir / "envelope.csv", ecsv);
  } else {
    std::filesystem::remove(out_dir / "envelope.csv");
  }

  write_file(out_dir / "scenario.json", scenario_to_json(sc).dump(2) + "\n");

  json manifest;
  manifest["version"] = kVersion;
  manifest["command"] = bundle.command;
  manifest["input_sha256"] = sha256_hex(bundle.input_text);
  manifest["grid"] = {{"cells", sol.grid.space.cells}, {"steps", time.steps}, {"dt", time.dt()}, {"T", time.horizon}};
  manifest["cfl"] = sc.cfl;
  manifest["seeds"] = {{"u_x_audit", kAuditSeed}};
  manifest["snapshot_levels"] = sol.snapshot_levels;
  manifest["snapshot_rule"] = "nearest grid level, no interpolation";
  manifest["files"] = bundle.envelope
                          ? json::array({"snapshots.csv", "traces.csv", "diagnostics.csv", "envelope.csv", "scenario.json"})
                          : json::array({"snapshots.csv", "traces.csv", "diagnostics.csv", "scenario.json"});
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace nettransport
