#include "fcrpool/agents.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <ostream>

#include "fcrpool/parallel.hpp"

namespace fcrpool::agents {

std::string to_string(const AgentId& id) {
  switch (id.kind) {
    case AgentKind::kAsset: return "asset:" + std::to_string(id.index);
    case AgentKind::kCircle: return "circle:" + std::to_string(id.index);
    case AgentKind::kFsp: return "fsp";
  }
  return "unknown";
}

std::string_view to_string(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::kLocalZ: return "local_z";
    case PayloadKind::kLocalP: return "local_p";
    case PayloadKind::kCircleReply: return "circle_reply";
    case PayloadKind::kFspReply: return "fsp_reply";
    case PayloadKind::kDone: return "done";
  }
  return "unknown";
}

std::size_t Topology::num_links() const {
  std::size_t n = asset_circles.size();
  for (const auto& c : asset_circles) n += c.size();
  return n;
}

std::size_t Topology::messages_per_round() const {
  std::size_t n = 0;
  for (const auto& c : asset_circles) n += c.size() + 1;
  for (const auto& m : circle_assets) n += m.size();
  return n + asset_circles.size();
}

bool Topology::linked(std::size_t asset, std::size_t circle) const {
  if (asset >= asset_circles.size()) return false;
  const auto& c = asset_circles[asset];
  return std::binary_search(c.begin(), c.end(), circle);
}

Topology build_topology(const Scenario& s) {
  Topology t;
  t.asset_circles.resize(s.num_assets());
  t.circle_assets.resize(s.num_circles());
  for (std::size_t c = 0; c < s.num_circles(); ++c) {
    for (std::size_t r : s.circle_rows(c)) {
      if (r >= s.num_assets()) {
        throw Error(ErrorKind::kInconsistentFamily, "circle names an unknown asset");
      }
      t.circle_assets[c].push_back(r);
      t.asset_circles[r].push_back(c);
    }
  }
  for (std::size_t i = 0; i < s.num_assets(); ++i) {
    if (t.asset_circles[i].empty()) {
      throw Error(ErrorKind::kInconsistentFamily, "asset belongs to no circle set");
    }
  }
  return t;
}

PrivacyScanner::PrivacyScanner(const Scenario& s) {
  const double skip[] = {0.0, 1.0, s.power_cap()};
  for (double c : s.cost().flat()) {
    if (std::find(std::begin(skip), std::end(skip), c) != std::end(skip)) continue;
    cost_bits_.push_back(std::bit_cast<std::uint64_t>(c));
  }
  std::sort(cost_bits_.begin(), cost_bits_.end());
  cost_bits_.erase(std::unique(cost_bits_.begin(), cost_bits_.end()), cost_bits_.end());
}

std::size_t PrivacyScanner::scan(const Message& m) const {
  std::size_t hits = 0;
  for (double v : m.payload) {
    if (std::binary_search(cost_bits_.begin(), cost_bits_.end(), std::bit_cast<std::uint64_t>(v))) {
      ++hits;
    }
  }
  return hits;
}

namespace {

using Outbox = std::vector<Message>;

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

class AssetAgent {
 public:
  AssetAgent(std::size_t row, std::span<const double> cost, std::vector<std::size_t> circles)
      : row_(row),
        cost_(cost.begin(), cost.end()),
        circles_(std::move(circles)),
        p_(cost.size()),
        z_(cost.size()),
        p_h_(cost.size()),
        u_h_(cost.size()),
        z_g_(circles_.size(), std::vector<double>(cost.size())),
        u_g_(circles_.size(), std::vector<double>(cost.size())) {}

  Outbox step(const kernels::KernelTable& kt, const Scenario& s, const AdmmParams& params,
              RoundKind kind, int k) {
    std::vector<CircleCopy> copies;
    for (std::size_t j = 0; j < circles_.size(); ++j) copies.push_back({z_g_[j], u_g_[j]});
    solve_local_rows(kt, cost_, s.fcr_price(), s.power_cap(), p_h_, u_h_, copies, params, kind,
                     p_, z_);
    circle_replies_ = 0;
    fsp_replies_ = 0;
    Outbox out;
    const AgentId me{AgentKind::kAsset, row_};
    for (std::size_t c : circles_) {
      out.push_back({me, {AgentKind::kCircle, c}, k, PayloadKind::kLocalZ, z_, {}});
    }
    out.push_back({me, {AgentKind::kFsp, 0}, k, PayloadKind::kLocalP, p_, {}});
    return out;
  }

  void receive(const Message& m) {
    const std::size_t T = p_.size();
    if (m.kind == PayloadKind::kCircleReply) {
      const auto it = std::lower_bound(circles_.begin(), circles_.end(), m.from.index);
      const auto j = static_cast<std::size_t>(it - circles_.begin());
      std::copy(m.payload.begin(), m.payload.begin() + T, z_g_[j].begin());
      std::copy(m.payload.begin() + T, m.payload.end(), u_g_[j].begin());
      ++circle_replies_;
    } else if (m.kind == PayloadKind::kFspReply) {
      std::copy(m.payload.begin(), m.payload.begin() + T, p_h_.begin());
      std::copy(m.payload.begin() + T, m.payload.end(), u_h_.begin());
      ++fsp_replies_;
    } else if (m.kind == PayloadKind::kDone) {
      done_ = m.status;
    } else {
      throw Error(ErrorKind::kTransportError, "asset received an asset-bound request");
    }
  }

  bool round_complete() const {
    return circle_replies_ == circles_.size() && fsp_replies_ == 1;
  }

  const std::vector<double>& p() const { return p_; }
  const std::vector<double>& z() const { return z_; }
  std::optional<AdmmStatus> done() const { return done_; }

 private:
  std::size_t row_;
  std::vector<double> cost_;  // never leaves this agent
  std::vector<std::size_t> circles_;
  std::vector<double> p_, z_, p_h_, u_h_;
  std::vector<std::vector<double>> z_g_, u_g_;
  std::size_t circle_replies_ = 0;
  std::size_t fsp_replies_ = 0;
  std::optional<AdmmStatus> done_;
};

class CircleAgent {
 public:
  CircleAgent(std::size_t index, std::vector<std::size_t> members, std::vector<AssetId> ids,
              std::size_t horizon, int cap)
      : index_(index),
        members_(std::move(members)),
        ids_(std::move(ids)),
        z_f_(members_.size(), horizon),
        z_g_(members_.size(), horizon),
        u_g_(members_.size(), horizon),
        cap_(cap) {}

  void receive(const Message& m) {
    const auto it = std::lower_bound(members_.begin(), members_.end(), m.from.index);
    const auto r = static_cast<std::size_t>(it - members_.begin());
    std::copy(m.payload.begin(), m.payload.end(), z_f_.row(r).begin());
    ++received_;
  }

  Outbox step(const kernels::KernelTable& kt, int k) {
    if (received_ != members_.size()) {
      throw Error(ErrorKind::kTransportError, "circle agent is missing member activations");
    }
    received_ = 0;
    last_ = circle_step(kt, z_f_, z_g_, u_g_, ids_, cap_);
    Outbox out;
    const AgentId me{AgentKind::kCircle, index_};
    for (std::size_t r = 0; r < members_.size(); ++r) {
      out.push_back({me, {AgentKind::kAsset, members_[r]}, k, PayloadKind::kCircleReply,
                     concat(z_g_.row(r), u_g_.row(r)), {}});
    }
    return out;
  }

  const CircleStep& last() const { return last_; }

 private:
  std::size_t index_;
  std::vector<std::size_t> members_;
  std::vector<AssetId> ids_;
  Matrix z_f_, z_g_, u_g_;
  int cap_;
  std::size_t received_ = 0;
  CircleStep last_;
};

class FspAgent {
 public:
  FspAgent(std::size_t assets, std::size_t horizon)
      : p_f_(assets, horizon), p_h_(assets, horizon), u_h_(assets, horizon), got_(assets, 0) {}

  void receive(const Message& m) {
    std::copy(m.payload.begin(), m.payload.end(), p_f_.row(m.from.index).begin());
    ++got_[m.from.index];
  }

  Outbox step(const kernels::KernelTable& kt, int k) {
    for (auto& g : got_) {
      if (g != 1) throw Error(ErrorKind::kTransportError, "FSP is missing an asset schedule");
      g = 0;
    }
    last_ = fsp_step(kt, p_f_, p_h_, u_h_);
    Outbox out;
    const AgentId me{AgentKind::kFsp, 0};
    for (std::size_t i = 0; i < p_f_.rows(); ++i) {
      out.push_back({me, {AgentKind::kAsset, i}, k, PayloadKind::kFspReply,
                     concat(p_h_.row(i), u_h_.row(i)), {}});
    }
    return out;
  }

  Outbox finish(AdmmStatus status, int k) const {
    Outbox out;
    for (std::size_t i = 0; i < p_f_.rows(); ++i) {
      Message m{{AgentKind::kFsp, 0}, {AgentKind::kAsset, i}, k, PayloadKind::kDone, {}, status};
      out.push_back(std::move(m));
    }
    return out;
  }

  const FspStep& last() const { return last_; }
  const Matrix& p_f() const { return p_f_; }

 private:
  Matrix p_f_, p_h_, u_h_;
  std::vector<int> got_;
  FspStep last_;
};

class Transport {
 public:
  Transport(const Topology& topo, std::size_t horizon, const PrivacyScanner* scanner,
            std::ostream* log)
      : topo_(topo), horizon_(horizon), scanner_(scanner), log_(log) {}

  void check(const Message& m) const {
    const std::size_t n_assets = topo_.asset_circles.size();
    const std::size_t n_circles = topo_.circle_assets.size();
    auto fail = [&](const char* what) {
      throw Error(ErrorKind::kTransportError, std::string(what) + " (" + to_string(m.from) +
                                                  " -> " + to_string(m.to) + ")");
    };
    auto is = [](const AgentId& a, AgentKind k) { return a.kind == k; };
    std::size_t want = 0;
    switch (m.kind) {
      case PayloadKind::kLocalZ:
        if (!is(m.from, AgentKind::kAsset) || !is(m.to, AgentKind::kCircle)) fail("bad route");
        if (m.to.index >= n_circles || !topo_.linked(m.from.index, m.to.index)) fail("no link");
        want = horizon_;
        break;
      case PayloadKind::kLocalP:
        if (!is(m.from, AgentKind::kAsset) || !is(m.to, AgentKind::kFsp)) fail("bad route");
        if (m.from.index >= n_assets) fail("no link");
        want = horizon_;
        break;
      case PayloadKind::kCircleReply:
        if (!is(m.from, AgentKind::kCircle) || !is(m.to, AgentKind::kAsset)) fail("bad route");
        if (m.from.index >= n_circles || !topo_.linked(m.to.index, m.from.index)) fail("no link");
        want = 2 * horizon_;
        break;
      case PayloadKind::kFspReply:
      case PayloadKind::kDone:
        if (!is(m.from, AgentKind::kFsp) || !is(m.to, AgentKind::kAsset)) fail("bad route");
        if (m.to.index >= n_assets) fail("no link");
        want = m.kind == PayloadKind::kDone ? 0 : 2 * horizon_;
        break;
    }
    if (m.payload.size() != want) fail("payload length");
  }

  /// Validates, accounts and hands each message of `box` to `deliver`.
  template <typename Deliver>
  void flush(Outbox& box, RoundStats& stats, Deliver&& deliver) {
    stats.max_fanout = std::max(stats.max_fanout, box.size());
    for (auto& m : box) {
      check(m);
      ++stats.messages_sent;
      stats.bytes_estimate += 8 * m.payload.size();
      if (scanner_ != nullptr) privacy_hits_ += scanner_->scan(m);
      if (log_ != nullptr) {
        *log_ << "{\"k\":" << m.iteration << ",\"from\":\"" << to_string(m.from) << "\",\"to\":\""
              << to_string(m.to) << "\",\"kind\":\"" << to_string(m.kind)
              << "\",\"scalars\":" << m.payload.size() << "}\n";
      }
      deliver(m);
    }
    box.clear();
  }

  std::size_t privacy_hits() const { return privacy_hits_; }

 private:
  const Topology& topo_;
  std::size_t horizon_;
  const PrivacyScanner* scanner_;
  std::ostream* log_;
  std::size_t privacy_hits_ = 0;
};

}  // namespace

SimulationResult run_simulation(const Scenario& s, const AdmmParams& params,
                                const SimulationOptions& options,
                                const AdmmCallbacks& callbacks) {
  params.validate();
  const auto& kt = kernels_for(params);
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = s.num_assets();
  const std::size_t T = s.horizon();

  SimulationResult result;
  result.topology = build_topology(s);
  const Topology& topo = result.topology;

  std::vector<AssetAgent> assets;
  for (std::size_t i = 0; i < n; ++i) assets.emplace_back(i, s.cost().row(i), topo.asset_circles[i]);
  std::vector<CircleAgent> circles;
  for (std::size_t c = 0; c < topo.circle_assets.size(); ++c) {
    std::vector<AssetId> ids;
    for (std::size_t r : topo.circle_assets[c]) ids.push_back(s.points()[r].id);
    circles.emplace_back(c, topo.circle_assets[c], std::move(ids), T, s.circle_cap());
  }
  FspAgent fsp(n, T);

  std::optional<PrivacyScanner> scanner;
  if (options.scan_privacy) scanner.emplace(s);
  Transport net(topo, T, scanner ? &*scanner : nullptr, options.message_log);

  auto deliver = [&](const Message& m) {
    switch (m.to.kind) {
      case AgentKind::kAsset: assets[m.to.index].receive(m); break;
      case AgentKind::kCircle: circles[m.to.index].receive(m); break;
      case AgentKind::kFsp: fsp.receive(m); break;
    }
  };

  RunMonitor monitor(s, params);
  std::vector<Outbox> asset_out(n);
  std::vector<Outbox> side_out(circles.size() + 1);
  Matrix z_f(n, T);  // observer copy for the monitor, not a message
  AdmmStatus status = AdmmStatus::kContinue;
  int k = 0;
  for (; status == AdmmStatus::kContinue; ++k) {
    const RoundKind kind = round_kind(params, k);
    RoundStats stats{k, 0, 0, 0};

    parallel_for(n, params.workers,
                 [&](std::size_t i) { asset_out[i] = assets[i].step(kt, s, params, kind, k); });
    for (auto& box : asset_out) net.flush(box, stats, deliver);

    const std::size_t n_circles = circles.size();
    parallel_for(n_circles + 1, params.workers, [&](std::size_t c) {
      side_out[c] = c == n_circles ? fsp.step(kt, k) : circles[c].step(kt, k);
    });
    for (auto& box : side_out) net.flush(box, stats, deliver);

    for (const auto& a : assets) {
      if (!a.round_complete()) throw Error(ErrorKind::kTransportError, "asset missed a reply");
    }
    result.rounds.push_back(stats);

    for (std::size_t i = 0; i < n; ++i) std::copy(assets[i].z().begin(), assets[i].z().end(), z_f.row(i).begin());
    double circle_sq = 0.0;
    bool within = true;
    for (const auto& c : circles) {
      circle_sq += c.last().residual_sq;
      within = within && c.last().within_cap;
    }
    status = monitor.observe(k, kind, fsp.p_f(), z_f, circle_sq, within, fsp.last());
    if (callbacks.on_iteration) callbacks.on_iteration({monitor.trace().back(), kind, fsp.p_f(), z_f});
  }

  Outbox done = fsp.finish(status, k - 1);
  result.closing.iteration = k - 1;
  net.flush(done, result.closing, deliver);

  const double ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  result.report = monitor.finish(status, ms);
  result.report.kernel_isa = std::string(kernels::to_string(kt.isa));
  result.privacy_hits = net.privacy_hits();
  return result;
}

}  // namespace fcrpool::agents
