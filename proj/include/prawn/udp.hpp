#ifndef PRAWN_UDP_HPP
#define PRAWN_UDP_HPP

#include "prawn/clock.hpp"
#include "prawn/engine.hpp"
#include "prawn/transport.hpp"

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace prawn {

class BindError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Parses dotted-quad "a.b.c.d" into host byte order. Throws std::invalid_argument.
std::uint32_t parse_ipv4 (const std::string &text);

/// Deterministic 10.87.x.y address derived from a node id.
std::string auto_ipv4_for (NodeId id);

/// Owning datagram socket.
class UdpSocket
{
public:
  UdpSocket () = default;
  /// Throws BindError.
  UdpSocket (std::uint32_t bind_address, std::uint16_t port, bool broadcast);
  ~UdpSocket ();
  UdpSocket (UdpSocket &&other) noexcept;
  UdpSocket &operator= (UdpSocket &&other) noexcept;
  UdpSocket (const UdpSocket &) = delete;
  UdpSocket &operator= (const UdpSocket &) = delete;

  int fd () const { return m_fd; }
  Ipv4Endpoint local () const;

  bool send_to (std::span<const std::uint8_t> data, Ipv4Endpoint to) const;
  /// Non-blocking receive; nullopt when nothing is pending.
  std::optional<std::pair<Frame, Ipv4Endpoint>> try_receive () const;

private:
  int m_fd = -1;
};

struct UdpTransportOptions
{
  std::uint32_t bind_address = 0; // INADDR_ANY
  std::uint16_t port = 3010;
  std::string interface_name = "ath0";
  /// Where broadcasts go. Empty: the interface broadcast address (or
  /// 255.255.255.255) on the same port.
  std::vector<Ipv4Endpoint> broadcast_targets;
};

///
/// UDP backend. Transmit power cannot be applied to a socket, so the
/// requested power is only recorded; RSSI is reported as unknown.
///
class UdpTransport : public Transport
{
public:
  /// Throws BindError.
  explicit UdpTransport (UdpTransportOptions options);

  SendStatus send (std::span<const std::uint8_t> frame, const Destination &dest,
                   unsigned tx_power_mw) override;
  MacAddress mac () const override { return m_mac; }

  int fd () const { return m_socket.fd (); }
  Ipv4Endpoint local () const { return m_socket.local (); }
  const std::vector<Ipv4Endpoint> &broadcast_targets () const { return m_targets; }
  void set_broadcast_targets (std::vector<Ipv4Endpoint> targets) { m_targets = std::move (targets); }
  unsigned last_tx_power_mw () const { return m_last_power; }

  /// Next pending frame not sent by this node, if any.
  std::optional<std::pair<Frame, RxMeta>> try_receive (Millis now);

private:
  bool is_own (Ipv4Endpoint from) const;

  UdpSocket m_socket;
  std::vector<Ipv4Endpoint> m_targets;
  std::vector<std::uint32_t> m_local_addresses;
  MacAddress m_mac{};
  unsigned m_last_power = 0;
};

/// Multiplexes the neighbor socket and the loopback client socket.
class UdpEventSource : public EventSource
{
public:
  /// Binds 127.0.0.1:client_port. Throws BindError.
  UdpEventSource (UdpTransport &transport, std::uint16_t client_port, const Clock &clock,
                  std::chrono::milliseconds max_wait = std::chrono::milliseconds (200));

  Event wait (Millis deadline) override;
  void reply (const TransportAddress &to, std::string_view text) override;

  std::uint16_t client_port () const { return m_client.local ().port; }

private:
  UdpTransport &m_transport;
  UdpSocket m_client;
  const Clock &m_clock;
  std::chrono::milliseconds m_max_wait;
};

} // namespace prawn

#endif // PRAWN_UDP_HPP
