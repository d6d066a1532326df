#ifndef PRAWN_ADDRESS_HPP
#define PRAWN_ADDRESS_HPP

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>

namespace prawn {

/// Index of a node attached to the simulated medium.
struct SimNodeIndex
{
  std::uint32_t index = 0;
  auto operator<=> (const SimNodeIndex &) const = default;
};

/// IPv4 endpoint, host byte order.
struct Ipv4Endpoint
{
  std::uint32_t address = 0;
  std::uint16_t port = 0;
  auto operator<=> (const Ipv4Endpoint &) const = default;
};

/// Where a frame came from, as seen by the transport.
class TransportAddress
{
public:
  TransportAddress () = default;
  TransportAddress (SimNodeIndex sim) : m_value (sim) {}
  TransportAddress (Ipv4Endpoint ip) : m_value (ip) {}

  bool is_sim () const { return std::holds_alternative<SimNodeIndex> (m_value); }
  SimNodeIndex sim () const { return std::get<SimNodeIndex> (m_value); }
  Ipv4Endpoint ipv4 () const { return std::get<Ipv4Endpoint> (m_value); }

  /// "sim:3" or "10.0.0.1:3010".
  std::string to_string () const;

  auto operator<=> (const TransportAddress &) const = default;

  std::size_t hash () const;

private:
  std::variant<SimNodeIndex, Ipv4Endpoint> m_value;
};

/// Tag for the all-neighbors destination.
struct Broadcast
{
  auto operator<=> (const Broadcast &) const = default;
};

using Destination = std::variant<Broadcast, TransportAddress>;

} // namespace prawn

template <>
struct std::hash<prawn::TransportAddress>
{
  std::size_t operator() (const prawn::TransportAddress &a) const noexcept { return a.hash (); }
};

#endif // PRAWN_ADDRESS_HPP
