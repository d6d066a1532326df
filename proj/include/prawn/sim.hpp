#ifndef PRAWN_SIM_HPP
#define PRAWN_SIM_HPP

///
/// \file sim.hpp
/// \brief Deterministic multi-node runner: simulated clock, simulated medium,
/// one engine per node, prototypes attached through the client primitives.
///

#include "prawn/client.hpp"
#include "prawn/clock.hpp"
#include "prawn/engine.hpp"
#include "prawn/medium.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace prawn {

struct NodeSpec
{
  std::string name;
  Position position;
  /// node_name is overwritten with name.
  EngineConfig config;
  Millis start_ms = 0;
};

struct TraceEvent
{
  enum class Kind { TX, RX, SNAPSHOT, ERR, STATE };

  Millis t = 0;
  std::string node;
  Kind kind = Kind::TX;
  PacketType type = PacketType::Reserved;
  unsigned power_mw = 0;
  std::size_t bytes = 0;
  std::string detail;

  /// "t=<ms> <node> <KIND> ..." single-line rendering.
  std::string line () const;
  bool operator== (const TraceEvent &) const = default;
};

std::string_view to_string (TraceEvent::Kind kind);
std::string_view packet_name (PacketType type);

class Simulation;

/// Transport handed to a simulated engine; forwards to the shared medium.
class SimTransport : public Transport
{
public:
  SimTransport (Simulation &sim, std::uint32_t index, MacAddress mac)
    : m_sim (sim), m_index (index), m_mac (mac) {}

  SendStatus send (std::span<const std::uint8_t> frame, const Destination &dest,
                   unsigned tx_power_mw) override;
  MacAddress mac () const override { return m_mac; }

private:
  Simulation &m_sim;
  std::uint32_t m_index;
  MacAddress m_mac;
};

///
/// \brief Steps every node under one simulated clock.
///
/// Events at equal times run in scheduling order, so a run is a pure function
/// of the node specs, the medium seed and the scripted actions.
///
class Simulation
{
public:
  /// Called whenever data has been queued for the node's client.
  using AppHook = std::function<void (Client &client, Millis now)>;
  /// Sees every transmitted frame before propagation.
  using FrameTap = std::function<void (std::size_t sender, std::span<const std::uint8_t> frame,
                                       const Destination &dest, unsigned tx_power_mw)>;

  explicit Simulation (MediumModel medium);
  ~Simulation ();
  Simulation (const Simulation &) = delete;
  Simulation &operator= (const Simulation &) = delete;

  /// Every node learns every other node's name, as from a shared hosts file.
  std::size_t add_node (NodeSpec spec);

  std::size_t size () const { return m_nodes.size (); }
  std::optional<std::size_t> find (const std::string &name) const;
  const std::string &name (std::size_t node) const;
  Engine &engine (std::size_t node);
  const Engine &engine (std::size_t node) const;
  Client &client (std::size_t node);
  bool running (std::size_t node) const;

  SimMedium &medium () { return m_medium; }
  Millis now () const { return m_clock.now (); }

  /// Schedules a scripted action.
  void at (Millis t, std::function<void ()> action);
  /// Runs a client call against a node; calls to stopped nodes become ERR events.
  void client_call (std::size_t node, const std::function<void (Client &)> &call);
  void stop_node (std::size_t node);
  void set_app (std::size_t node, AppHook hook);
  void set_frame_tap (FrameTap tap) { m_tap = std::move (tap); }

  /// Records a SNAPSHOT trace line per neighbor and returns the snapshot.
  NeighborSnapshot record_snapshot (std::size_t node);

  void run_until (Millis t);

  const std::vector<TraceEvent> &trace () const { return m_trace; }
  std::string trace_text () const;

private:
  friend class SimTransport;

  struct Node
  {
    std::string name;
    std::unique_ptr<SimTransport> transport;
    std::unique_ptr<Engine> engine;
    std::unique_ptr<InProcessChannel> channel;
    std::unique_ptr<Client> client;
    AppHook app;
    bool running = false;
    bool stopped = false;
    std::uint64_t timer_generation = 0;
    std::optional<Millis> timer_at;
  };

  struct Pending
  {
    Millis t;
    std::uint64_t seq;
    std::function<void ()> fn;
    bool operator> (const Pending &o) const { return t != o.t ? t > o.t : seq > o.seq; }
  };

  void schedule (Millis t, std::function<void ()> fn);
  void rearm (std::size_t node);
  SendStatus transmit (std::size_t sender, std::span<const std::uint8_t> frame,
                       const Destination &dest, unsigned tx_power_mw);
  void push_trace (std::size_t node, const EngineEvent &ev);

  ManualClock m_clock;
  SimMedium m_medium;
  std::vector<Node> m_nodes;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> m_queue;
  std::uint64_t m_seq = 0;
  std::vector<TraceEvent> m_trace;
  FrameTap m_tap;
};

// Scenario files.

struct ScenarioNode
{
  std::string name;
  Position position;
  std::map<std::string, std::string> overrides;
};

struct ScenarioAction
{
  Millis t = 0;
  /// move | send | broadcast | recv | stop | snapshot
  std::string verb;
  std::vector<std::string> args;
  /// Message text for send/broadcast.
  std::string text;
};

struct Scenario
{
  MediumModel medium;
  Millis duration_ms = 10000;
  EngineConfig defaults;
  std::vector<ScenarioNode> nodes;
  std::vector<ScenarioAction> actions;

  /// Throws std::invalid_argument (unique names, action times within duration).
  void validate () const;
};

/// key=value header lines, "node <name> <x> <y> [k=v ...]" lines and
/// "at <ms> <verb> <args...>" lines; "#" starts a comment. Throws std::invalid_argument.
Scenario parse_scenario (std::string_view text);

std::vector<TraceEvent> run_scenario (const Scenario &scenario);

/// "t_ms,node,neighbor,rssi_dbm" rows from beacon receptions at node.
std::string rssi_series_csv (const std::vector<TraceEvent> &trace, const std::string &node);

// Overhead accounting.

struct OverheadReport
{
  double beacon_bytes_per_period = 0;
  double feedback_bytes_per_period = 0;
  double data_header_bytes_per_period = 0;
  double bytes_per_period = 0;
  double node_bits_per_second = 0;
  double network_bits_per_second = 0;

  bool operator== (const OverheadReport &) const = default;
};

/// Per-node-per-period cost: 24 K beacon bytes, 16 m feedback bytes and 4
/// header bytes per data packet. Throws std::invalid_argument on non-positive
/// node count or period.
OverheadReport overhead (unsigned nodes, Millis period_ms, unsigned levels,
                         unsigned neighbors_per_node, double data_packets_per_second);

/// Control and header bytes one node transmitted in [from, to), from a trace.
struct MeasuredOverhead
{
  std::uint64_t beacon_bytes = 0;
  std::uint64_t feedback_bytes = 0;
  std::uint64_t data_header_bytes = 0;
};

MeasuredOverhead measure_overhead (const std::vector<TraceEvent> &trace, const std::string &node,
                                   Millis from, Millis to);

} // namespace prawn

#endif // PRAWN_SIM_HPP
