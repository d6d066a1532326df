#ifndef PRAWN_CLIENT_HPP
#define PRAWN_CLIENT_HPP

#include "prawn/protocol.hpp"
#include "prawn/udp.hpp"

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace prawn {

class Engine;

/// Carries one request datagram to an engine and returns its reply.
class ClientChannel
{
public:
  virtual ~ClientChannel () = default;
  /// Throws ClientError("timeout") when no reply arrives in time.
  virtual std::string exchange (std::string_view request) = 0;
};

/// Loopback UDP channel to an engine's client port.
class UdpClientChannel : public ClientChannel
{
public:
  explicit UdpClientChannel (std::uint16_t engine_port,
                             std::chrono::milliseconds timeout = std::chrono::milliseconds (1000),
                             std::uint32_t engine_address = 0x7F000001u);

  std::string exchange (std::string_view request) override;

private:
  UdpSocket m_socket;
  Ipv4Endpoint m_engine;
  std::chrono::milliseconds m_timeout;
};

/// Direct call into an engine living in the same process.
class InProcessChannel : public ClientChannel
{
public:
  explicit InProcessChannel (Engine &engine) : m_engine (engine) {}
  std::string exchange (std::string_view request) override;

private:
  Engine &m_engine;
};

/// An ERR reply, a timeout, or a request the library refuses to send.
class ClientError : public std::runtime_error
{
public:
  ClientError (std::string code, const std::string &message)
    : std::runtime_error (message), m_code (std::move (code)) {}

  const std::string &code () const { return m_code; }

private:
  std::string m_code;
};

struct Message
{
  NodeId sender;
  std::string sender_name;
  Bytes payload;

  std::string text () const { return to_text (payload); }
};

///
/// \brief The five primitives: Info, Neighbors, Send, Send_Broadcast, Receive.
///
/// Destination names are hashed to node ids here; the engine only sees ids.
///
class Client
{
public:
  explicit Client (ClientChannel &channel) : m_channel (channel) {}

  InfoReply info ();
  NeighborsReply neighbors ();

  void send (std::string_view message, std::string_view destination_name,
             std::optional<unsigned> tx_power_mw = std::nullopt);
  void send (const Bytes &message, NodeId destination,
             std::optional<unsigned> tx_power_mw = std::nullopt);

  void send_broadcast (std::string_view message, std::optional<unsigned> tx_power_mw = std::nullopt);
  void send_broadcast (const Bytes &message, std::optional<unsigned> tx_power_mw = std::nullopt);

  /// Non-blocking; nullopt when nothing has been received.
  std::optional<Message> receive ();

private:
  ClientReply call (const ClientRequest &request);
  void expect_ok (const ClientRequest &request);

  ClientChannel &m_channel;
};

} // namespace prawn

#endif // PRAWN_CLIENT_HPP
