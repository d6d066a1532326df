#ifndef PRAWN_ENGINE_HPP
#define PRAWN_ENGINE_HPP

#include "prawn/clock.hpp"
#include "prawn/neighbor_table.hpp"
#include "prawn/protocol.hpp"
#include "prawn/transport.hpp"
#include "prawn/wire.hpp"

#include <atomic>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace prawn {

inline constexpr std::string_view kVersion = "1.0.0";

struct EngineConfig
{
  std::string node_name;
  unsigned beacon_period_ms = 10000;
  std::uint16_t neighbor_port = 3010;
  std::uint16_t client_port = 3020;
  std::string interface_name = "ath0";
  /// Strictly ascending, each in [1, 255] mW.
  std::vector<unsigned> power_levels_mw{1, 12, 100};
  bool power_control_enabled = true;
  std::optional<unsigned> fixed_tx_power_mw;
  unsigned per_window = 5;
  unsigned dead_threshold = 3;
  double grace_factor = 1.5;
  unsigned dead_retention_cycles = 10;
  unsigned two_hop_stale_cycles = 3;
  std::size_t queue_bound = 1024;
  int verbosity = 0;
  bool daemon_mode = false;
  /// Names this node can resolve back from ids (its own name is always known).
  std::vector<std::string> known_names;

  /// Throws std::invalid_argument.
  void validate () const;

  /// Powers beaconed in one cycle: all levels, or a single level when power
  /// control is off or a fixed power is set.
  std::vector<unsigned> cycle_levels () const;
  /// Power used for data when the client does not ask for one.
  unsigned default_power_mw () const;
  NeighborParams neighbor_params () const;
};

struct CycleSlot
{
  Millis send_time = 0;
  unsigned power_mw = 0;

  bool operator== (const CycleSlot &) const = default;
};

/// Beacons of the cycle starting at cycle_start: lowest power first, evenly
/// spaced at period/K. Consecutive cycles abut.
std::vector<CycleSlot> schedule_cycle (const EngineConfig &config, Millis cycle_start);

struct ReceivedMessage
{
  NodeId sender;
  std::string sender_name;
  Bytes payload;
  Millis arrival = 0;
};

/// What the engine did, for tracing and console refresh.
struct EngineEvent
{
  enum class Kind { Tx, Rx, Loss, Malformed, Request };

  Kind kind = Kind::Tx;
  Millis at = 0;
  PacketType type = PacketType::Reserved;
  unsigned power_mw = 0;
  std::size_t bytes = 0;
  /// Free-form key=value details.
  std::string detail;
};

std::string_view to_string (EngineEvent::Kind kind);

struct EngineCounters
{
  std::uint64_t beacons_sent = 0;
  std::uint64_t feedback_sent = 0;
  std::uint64_t data_sent = 0;
  std::uint64_t data_received = 0;
  std::uint64_t malformed_frames = 0;
  std::uint64_t send_failures = 0;
  std::uint64_t queue_overflow_drops = 0;
  std::uint64_t requests = 0;
};

// Events of the main loop.
struct TimeoutEvent
{
};
struct ClientRequestEvent
{
  std::string text;
  TransportAddress reply_to;
};
struct NeighborMessageEvent
{
  Frame frame;
  RxMeta meta;
};
using Event = std::variant<TimeoutEvent, ClientRequestEvent, NeighborMessageEvent>;

/// Blocking source of engine events (sockets, queues).
class EventSource
{
public:
  virtual ~EventSource () = default;
  /// Next event, or TimeoutEvent once the clock reaches deadline.
  virtual Event wait (Millis deadline) = 0;
  virtual void reply (const TransportAddress &to, std::string_view text) = 0;
};

///
/// \brief The Prawn engine: beaconing, feedback, neighbor bookkeeping and the
/// client-facing request handler.
///
/// The engine is a passive state machine driven by three inputs: on_timer()
/// for regular operation, on_frame() for neighbor messages and handle() for
/// client requests. run() is the blocking main loop over an EventSource; the
/// simulator drives the same three entry points directly.
///
class Engine
{
public:
  using Observer = std::function<void (const EngineEvent &)>;

  Engine (EngineConfig config, Transport &transport, const Clock &clock);

  const EngineConfig &config () const { return m_config; }
  NodeId id () const { return m_id; }

  /// Anchors the first cycle at the current clock time.
  void start ();
  bool started () const { return m_started; }

  /// Performs every regular operation due at or before now.
  void on_timer ();
  /// Earliest absolute time at which on_timer() has work.
  Millis next_deadline () const;

  void on_frame (std::span<const std::uint8_t> frame, const RxMeta &meta);

  ClientReply handle (const ClientRequest &request);
  /// Parses, handles and renders one request datagram; never throws on bad input.
  std::string handle_request_text (std::string_view text);

  /// Blocks processing events until stop becomes true.
  void run (EventSource &source, const std::atomic<bool> &stop,
            const std::function<void ()> &after_event = {});

  void set_observer (Observer observer) { m_observer = std::move (observer); }

  const NeighborTable &neighbors () const { return m_table; }
  NeighborSnapshot snapshot () const { return m_table.snapshot (m_names); }
  const NameDirectory &names () const { return m_names; }
  /// Makes name resolvable from its id (sender names, snapshot labels).
  void learn_name (const std::string &name) { m_names.add (name); }
  const EngineCounters &counters () const { return m_counters; }
  std::size_t queued_messages () const { return m_queue.size (); }
  std::uint16_t next_sequence () const { return m_sequence; }
  /// Bumped on every neighbor table change.
  std::uint64_t table_version () const { return m_table_version; }

  InfoReply info () const;
  ClientReply send_data (NodeId destination, const Bytes &payload,
                         std::optional<unsigned> power_mw);
  ClientReply send_broadcast (const Bytes &payload, std::optional<unsigned> power_mw);

private:
  void emit (EngineEvent ev) const;
  void emit_beacon (unsigned power_mw);
  void emit_feedback ();
  void deliver_to_client (const DataPacket &packet, const RxMeta &meta);
  Millis slot_time (std::uint64_t cycle, std::size_t slot) const;

  EngineConfig m_config;
  Transport &m_transport;
  const Clock &m_clock;
  NodeId m_id;
  NameDirectory m_names;
  NeighborTable m_table;
  std::vector<unsigned> m_levels;

  bool m_started = false;
  Millis m_origin = 0;
  std::uint64_t m_cycle = 0;
  std::size_t m_slot = 0;
  std::uint16_t m_sequence = 0;

  std::deque<ReceivedMessage> m_queue;
  EngineCounters m_counters;
  std::uint64_t m_table_version = 0;
  Observer m_observer;
};

} // namespace prawn

#endif // PRAWN_ENGINE_HPP
