#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "nettransport/bounds.hpp"
#include "nettransport/scenario.hpp"
#include "nettransport/solver.hpp"

namespace nettransport {

/// Anything wrong with the user's input: unreadable file, bad JSON, a field
/// that fails validation. The CLI maps it to exit code 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Seed of the u_x finite-difference audit, recorded in every manifest.
inline constexpr std::uint64_t kAuditSeed = 20240601;

/// Parses and validates a scenario document. Field errors name the JSON path
/// ("network.edges[1].u_x: ..."); syntax errors carry line and column.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// The scenario as a document that parse_scenario accepts again.
nlohmann::json scenario_to_json(const Scenario& scenario);

/// Shortest round-trippable decimal (17 significant digits).
std::string format_number(double value);

/// Hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

struct ResultBundle {
  const Scenario& scenario;
  const SolutionField& solution;
  std::string input_text;
  std::optional<BoundEnvelope> envelope;
  std::string command = "simulate";
};

/// Writes snapshots.csv, traces.csv, diagnostics.csv, scenario.json,
/// manifest.json and, when an envelope is present, envelope.csv. Contents
/// depend only on the inputs, so repeated runs are byte-identical.
void write_results(const ResultBundle& bundle, const std::filesystem::path& out_dir);

/// Per-level mass bookkeeping written to diagnostics.csv. The residual is
/// mass(n+1) - mass(n) - dt (outer net inflow + source), zero up to rounding
/// whenever inner nodes balance their fluxes.
struct MassDiagnostics {
  Eigen::VectorXd mass;
  Eigen::VectorXd outer_net_inflow;
  Eigen::VectorXd source;
  Eigen::VectorXd residual;  // last entry 0 (no step after the final level)
};
MassDiagnostics mass_diagnostics(const Scenario& scenario, const SolutionField& solution);

}  // namespace nettransport
