#pragma once

// Simulated distributed runtime: one agent per asset, per circle set and one
// FSP agent, synchronous rounds, in-process message delivery. Agents run the
// same row-level steps as run_admm, so results are bit-identical to it.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fcrpool/admm.hpp"
#include "fcrpool/model.hpp"

namespace fcrpool::agents {

enum class AgentKind { kAsset, kCircle, kFsp };

struct AgentId {
  AgentKind kind = AgentKind::kFsp;
  std::size_t index = 0;
  friend bool operator==(const AgentId&, const AgentId&) = default;
};

std::string to_string(const AgentId& id);

enum class PayloadKind {
  kLocalZ,       // asset -> circle: z^f row
  kLocalP,       // asset -> fsp: p^f row
  kCircleReply,  // circle -> asset: z^g row then u^g row
  kFspReply,     // fsp -> asset: p^h row then u^h row
  kDone,         // fsp -> asset: final status, no payload
};

std::string_view to_string(PayloadKind kind);

struct Message {
  AgentId from;
  AgentId to;
  int iteration = 0;
  PayloadKind kind = PayloadKind::kDone;
  std::vector<double> payload;
  AdmmStatus status = AdmmStatus::kContinue;  // kDone only
};

struct RoundStats {
  int iteration = 0;
  std::size_t messages_sent = 0;
  std::size_t bytes_estimate = 0;  // payload scalars x 8
  std::size_t max_fanout = 0;      // most messages sent by one agent
};

/// Bidirectional links: asset i <-> circle s for i in C_s, asset i <-> fsp.
struct Topology {
  std::vector<std::vector<std::size_t>> asset_circles;  // ascending circle indices
  std::vector<std::vector<std::size_t>> circle_assets;  // ascending asset rows

  std::size_t num_links() const;
  std::size_t asset_degree(std::size_t asset) const { return asset_circles[asset].size() + 1; }
  /// Messages in one full round: sum_i (|S_i| + 1) + sum_s |C_s| + n_I.
  std::size_t messages_per_round() const;
  bool linked(std::size_t asset, std::size_t circle) const;
};

/// Throws kInconsistentFamily if a circle names an unknown asset or an asset
/// has no circle.
Topology build_topology(const Scenario& s);

/// Flags payload values that coincide bitwise with a private cost entry.
/// Exact 0 and 1 and the power cap are ignored: they are structural values
/// of every schedule and carry no cost information.
class PrivacyScanner {
 public:
  explicit PrivacyScanner(const Scenario& s);
  std::size_t scan(const Message& m) const;

 private:
  std::vector<std::uint64_t> cost_bits_;  // sorted
};

struct SimulationOptions {
  std::ostream* message_log = nullptr;  // NDJSON, one line per message
  bool scan_privacy = true;
};

struct SimulationResult {
  SolveReport report;
  std::vector<RoundStats> rounds;
  RoundStats closing;           // Done notifications
  std::size_t privacy_hits = 0;
  Topology topology;
};

SimulationResult run_simulation(const Scenario& s, const AdmmParams& params,
                                const SimulationOptions& options = {},
                                const AdmmCallbacks& callbacks = {});

}  // namespace fcrpool::agents
