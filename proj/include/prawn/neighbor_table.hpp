#ifndef PRAWN_NEIGHBOR_TABLE_HPP
#define PRAWN_NEIGHBOR_TABLE_HPP

#include "prawn/address.hpp"
#include "prawn/types.hpp"
#include "prawn/wire.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace prawn {

struct NeighborParams
{
  /// PER window size W.
  unsigned window = 5;
  /// Consecutive losses after which a power row is Dead.
  unsigned dead_threshold = 3;
  /// A beacon is lost once now > last_arrival + grace_factor * period.
  double grace_factor = 1.5;
  /// Dead entries are purged after this many of their beacon periods.
  unsigned dead_retention_cycles = 10;
  /// Two-hop entries not refreshed for this many periods are marked lost.
  unsigned two_hop_stale_cycles = 3;
};

/// Link statistics for beacons sent by one neighbor at one transmit power.
struct PowerLevelStats
{
  unsigned power_mw = 0;
  /// Last W expected-beacon outcomes, oldest first; true = received.
  std::deque<bool> window;
  std::uint16_t last_sequence = 0;
  Millis last_arrival = 0;
  std::optional<int> last_rssi_dbm;
  std::optional<int> max_rssi_dbm_cycle;
  unsigned consecutive_losses = 0;
  /// Losses already appended since last_arrival.
  unsigned losses_since_arrival = 0;
  std::uint64_t beacons_received = 0;
  LinkState state = LinkState::Active;

  unsigned received_in_window () const;
};

struct TwoHopEntry
{
  NodeId via;
  NodeId target;
  std::optional<unsigned> min_power_mw;
  std::optional<int> rssi_dbm;
  Millis last_seen = 0;
  bool lost = false;
};

struct NeighborEntry
{
  NodeId id;
  MacAddress mac{};
  TransportAddress network_address;
  unsigned beacon_period_ms = 0;
  std::map<unsigned, PowerLevelStats> per_power;
  /// Lowest power received during the last complete local cycle.
  std::optional<unsigned> min_rx_power_mw;
  /// Powers received during the cycle in progress.
  std::set<unsigned> received_this_cycle;
  /// Reverse link, from feedback this neighbor addressed to us.
  std::optional<unsigned> reverse_min_power_mw;
  std::optional<int> reverse_max_rssi_dbm;
  std::vector<TwoHopEntry> two_hop;
  LinkState state = LinkState::Active;
  Millis dead_since = 0;
};

/// Error rate over the PER window, kept as an exact fraction.
struct PerFraction
{
  unsigned lost = 0;
  unsigned window = 1;

  double value () const { return static_cast<double> (lost) / window; }
  bool operator== (const PerFraction &) const = default;
};

/// A state transition observed by tick().
struct LossEvent
{
  NodeId neighbor;
  unsigned power_mw = 0;
  Millis at = 0;
  bool row_died = false;
  bool entry_died = false;
};

enum class FeedbackOutcome { Reverse, TwoHop, Dropped };

/// Maps ids back to human names where the name is known locally.
class NameDirectory
{
public:
  void add (const std::string &name);
  std::optional<std::string> lookup (NodeId id) const;
  /// The name when known, else the 4-digit short hex id.
  std::string display (NodeId id) const;

private:
  std::unordered_map<NodeId, std::string> m_names;
};

// Snapshot: a self-contained, deterministic copy of the table for reporting.

struct PowerRowReport
{
  unsigned power_mw = 0;
  LinkState state = LinkState::Active;
  unsigned received = 0;
  unsigned window = 0;
  std::optional<int> rssi_dbm;
  unsigned consecutive_losses = 0;
  std::uint16_t last_sequence = 0;
  std::uint64_t beacons_received = 0;
  Millis last_arrival = 0;

  bool operator== (const PowerRowReport &) const = default;
};

struct TwoHopReport
{
  NodeId target;
  std::string target_name;
  std::optional<unsigned> min_power_mw;
  std::optional<int> rssi_dbm;
  bool lost = false;

  bool operator== (const TwoHopReport &) const = default;
};

struct NeighborReport
{
  NodeId id;
  std::optional<std::string> name;
  LinkState state = LinkState::Active;
  unsigned beacon_period_ms = 0;
  MacAddress mac{};
  std::optional<unsigned> min_rx_power_mw;
  std::optional<unsigned> reverse_min_power_mw;
  std::optional<int> reverse_max_rssi_dbm;
  std::vector<PowerRowReport> rows;
  std::vector<TwoHopReport> two_hop;

  bool operator== (const NeighborReport &) const = default;
};

struct NeighborSnapshot
{
  Millis taken_at = 0;
  std::vector<NeighborReport> neighbors;

  bool operator== (const NeighborSnapshot &) const = default;
};

///
/// \brief One node's view of its one-hop and two-hop neighborhood.
///
/// Owned by a single engine; all operations are synchronous. Losses are
/// detected by timeout only: a beacon at power p is lost when no beacon at p
/// arrives within grace_factor beacon periods of the previous one (and every
/// further period after that).
///
class NeighborTable
{
public:
  NeighborTable (NodeId self, NeighborParams params);

  NodeId self () const { return m_self; }
  const NeighborParams &params () const { return m_params; }
  Millis clock () const { return m_clock; }

  void record_beacon (const Beacon &beacon, const TransportAddress &source,
                      std::optional<int> rssi_dbm, Millis now);

  /// Appends timed-out losses, updates liveness, ages two-hop entries and
  /// purges expired Dead entries. A non-increasing now is a no-op.
  std::vector<LossEvent> tick (Millis now);

  FeedbackOutcome record_feedback (const FeedbackPacket &fb, const TransportAddress &source,
                                   Millis now);

  /// Closes the local cycle: fixes min_rx_power from this cycle's receptions,
  /// builds one feedback packet per retained neighbor and resets the cycle maxima.
  std::vector<FeedbackPacket> close_cycle ();

  /// Earliest time at which tick() would change something, if any.
  std::optional<Millis> next_deadline () const;

  const NeighborEntry *find (NodeId id) const;
  const NeighborEntry *find_by_address (const TransportAddress &address) const;
  const std::map<NodeId, NeighborEntry> &entries () const { return m_entries; }
  std::size_t size () const { return m_entries.size (); }

  /// Throws std::out_of_range when the entry or power row does not exist.
  PerFraction per (NodeId id, unsigned power_mw) const;

  std::uint64_t dropped_feedback () const { return m_dropped_feedback; }

  NeighborSnapshot snapshot (const NameDirectory &names) const;

private:
  void append_outcome (PowerLevelStats &row, bool received) const;
  void refresh_entry_state (NeighborEntry &entry, Millis now);
  Millis loss_deadline (const NeighborEntry &entry, const PowerLevelStats &row) const;
  Millis two_hop_deadline (const NeighborEntry &via, const TwoHopEntry &th) const;
  Millis purge_deadline (const NeighborEntry &entry) const;

  NodeId m_self;
  NeighborParams m_params;
  Millis m_clock = 0;
  std::map<NodeId, NeighborEntry> m_entries;
  std::uint64_t m_dropped_feedback = 0;
};

std::optional<unsigned> min_rx_power (const NeighborEntry &entry);

} // namespace prawn

#endif // PRAWN_NEIGHBOR_TABLE_HPP
