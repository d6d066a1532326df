#ifndef PRAWN_PROTOTYPES_HPP
#define PRAWN_PROTOTYPES_HPP

///
/// \file prototypes.hpp
/// \brief Small protocols built only on the client primitives: flooding,
/// two-flow network coding at a relay, signal-ordered topology listing and
/// RSSI monitoring.
///

#include "prawn/client.hpp"
#include "prawn/medium.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace prawn {

// Flooding.

/// Rebroadcasts every payload it has not seen before, once.
class FloodingApp
{
public:
  void originate (Client &client, const Bytes &payload);
  /// Drains the receive queue.
  void on_data (Client &client, Millis now);

  const std::vector<Bytes> &delivered () const { return m_delivered; }

private:
  std::set<Bytes> m_seen;
  std::vector<Bytes> m_delivered;
};

struct FloodResult
{
  std::uint64_t transmissions = 0;
  /// Copies handed to each node's application, origin included (always 0 there).
  std::vector<std::size_t> deliveries;
};

/// One flood from origin after the neighbor tables have settled.
FloodResult run_flooding (const std::vector<Position> &positions, const MediumModel &medium,
                          const EngineConfig &base, std::size_t origin, const Bytes &payload);

// Network coding.

/// Source payload: 'D' | seq(4) | data.
Bytes encode_source_payload (std::uint32_t seq, const Bytes &data);

struct CodedPart
{
  NodeId origin;
  std::uint32_t seq = 0;
  Bytes data;
};

/// 'X' | {origin(8) seq(4) len(2)} x 2 | data1 XOR data2, zero-padded to the longer.
Bytes encode_coded_payload (const CodedPart &a, const CodedPart &b);

/// Recovers the part that did not originate at self, given what self sent.
/// Returns nullopt when the frame is not a coded payload involving self.
std::optional<CodedPart> decode_coded_payload (const Bytes &payload, NodeId self,
                                               const std::map<std::uint32_t, Bytes> &sent);

/// Relay between two endpoints. With coding, a waiting packet of one flow is
/// XORed with the next packet of the other flow; a second packet of the same
/// flow pushes the waiting one out plain.
class RelayApp
{
public:
  RelayApp (NodeId a, NodeId b, bool coding) : m_a (a), m_b (b), m_coding (coding) {}

  void on_data (Client &client, Millis now);
  /// Sends any packet still on standby.
  void flush (Client &client);

  std::uint64_t coded () const { return m_coded; }
  std::uint64_t plain () const { return m_plain; }

private:
  struct Held
  {
    NodeId origin;
    std::uint32_t seq;
    Bytes data;
  };

  void forward_plain (Client &client, const Held &h);
  NodeId other (NodeId id) const { return id == m_a ? m_b : m_a; }

  NodeId m_a, m_b;
  bool m_coding;
  std::optional<Held> m_standby;
  std::uint64_t m_coded = 0;
  std::uint64_t m_plain = 0;
};

class EndpointApp
{
public:
  EndpointApp (NodeId self, NodeId relay) : m_self (self), m_relay (relay) {}

  void send (Client &client, std::uint32_t seq, const Bytes &data);
  void on_data (Client &client, Millis now);

  const std::map<std::uint32_t, Bytes> &sent () const { return m_sent; }
  const std::map<std::uint32_t, Bytes> &received () const { return m_received; }
  std::uint64_t undecodable () const { return m_undecodable; }

private:
  NodeId m_self, m_relay;
  std::map<std::uint32_t, Bytes> m_sent;
  std::map<std::uint32_t, Bytes> m_received;
  std::uint64_t m_undecodable = 0;
};

struct CodingResult
{
  std::uint64_t source_transmissions = 0;
  std::uint64_t relay_transmissions = 0;
  std::uint64_t coded = 0;
  std::uint64_t plain = 0;
  std::size_t decoded_at_a = 0;
  std::size_t decoded_at_b = 0;
  /// Every packet arrived at the other endpoint with identical octets.
  bool bit_exact = false;

  std::uint64_t total () const { return source_transmissions + relay_transmissions; }
};

/// Chain A - R - B, A and B out of each other's range, exchanging pairs of
/// random payloads of 1..max_payload octets.
CodingResult run_network_coding (std::size_t pairs, std::size_t max_payload, bool coding,
                                 std::uint64_t seed);

// Topology listing and monitoring.

struct RankedNeighbor
{
  NodeId id;
  std::string name;
  /// Strongest last RSSI over the neighbor's power rows.
  std::optional<int> rssi_dbm;
};

/// Strongest first; ties by id; neighbors without RSSI last.
std::vector<RankedNeighbor> sort_by_signal (const NeighborsReply &neighbors);

struct RssiSample
{
  Millis t = 0;
  std::optional<int> rssi_dbm;
  LinkState state = LinkState::Active;
};

/// Polls Neighbors() and keeps a per-neighbor RSSI series.
class MonitorApp
{
public:
  void poll (Client &client, Millis now);

  const std::map<std::string, std::vector<RssiSample>> &series () const { return m_series; }
  /// First poll at which the neighbor was reported Dead.
  std::optional<Millis> dead_at (const std::string &neighbor) const;
  /// "t_ms,neighbor,rssi_dbm,state" rows.
  std::string csv () const;

private:
  std::map<std::string, std::vector<RssiSample>> m_series;
};

} // namespace prawn

#endif // PRAWN_PROTOTYPES_HPP
