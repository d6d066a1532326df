#include "prawn/client.hpp"

#include "prawn/engine.hpp"

#include <poll.h>

namespace prawn {

UdpClientChannel::UdpClientChannel (std::uint16_t engine_port, std::chrono::milliseconds timeout,
                                    std::uint32_t engine_address)
  : m_socket (0x7F000001u, 0, false), m_engine{engine_address, engine_port}, m_timeout (timeout)
{
}

std::string
UdpClientChannel::exchange (std::string_view request)
{
  // Discard replies to earlier requests that timed out.
  while (m_socket.try_receive ())
    {
    }
  if (!m_socket.send_to (
          std::span (reinterpret_cast<const std::uint8_t *> (request.data ()), request.size ()),
          m_engine))
    throw ClientError ("send-failed", "cannot reach the engine's client port");

  auto deadline = std::chrono::steady_clock::now () + m_timeout;
  while (true)
    {
      if (auto got = m_socket.try_receive ())
        {
          if (got->second == m_engine)
            return std::string (got->first.begin (), got->first.end ());
          continue;
        }
      auto left = std::chrono::ceil<std::chrono::milliseconds> (
          deadline - std::chrono::steady_clock::now ());
      if (left.count () <= 0)
        throw ClientError ("timeout", "no reply from the engine within "
                                          + std::to_string (m_timeout.count ()) + " ms");
      pollfd pfd{m_socket.fd (), POLLIN, 0};
      ::poll (&pfd, 1, static_cast<int> (left.count ()));
    }
}

std::string
InProcessChannel::exchange (std::string_view request)
{
  return m_engine.handle_request_text (request);
}

ClientReply
Client::call (const ClientRequest &request)
{
  std::string text = m_channel.exchange (render_request (request));
  ClientReply reply;
  try
    {
      reply = parse_reply (text);
    }
  catch (const ProtocolError &e)
    {
      throw ClientError ("bad-reply", e.what ());
    }
  if (const auto *err = std::get_if<ErrReply> (&reply))
    throw ClientError (err->code, err->message);
  return reply;
}

void
Client::expect_ok (const ClientRequest &request)
{
  ClientReply reply = call (request);
  if (!std::holds_alternative<OkReply> (reply))
    throw ClientError ("bad-reply", "expected OK");
}

InfoReply
Client::info ()
{
  ClientReply reply = call (InfoRequest{});
  if (auto *r = std::get_if<InfoReply> (&reply))
    return std::move (*r);
  throw ClientError ("bad-reply", "expected INFO");
}

NeighborsReply
Client::neighbors ()
{
  ClientReply reply = call (NeighborsRequest{});
  if (auto *r = std::get_if<NeighborsReply> (&reply))
    return std::move (*r);
  throw ClientError ("bad-reply", "expected NBRS");
}

void
Client::send (std::string_view message, std::string_view destination_name,
              std::optional<unsigned> tx_power_mw)
{
  NodeId dest;
  try
    {
      dest = node_id_from_name (destination_name);
    }
  catch (const std::invalid_argument &e)
    {
      throw ClientError (std::string (err::kUnknownDestination), e.what ());
    }
  send (to_bytes (message), dest, tx_power_mw);
}

void
Client::send (const Bytes &message, NodeId destination, std::optional<unsigned> tx_power_mw)
{
  if (message.size () > kMaxPayloadSize)
    throw ClientError (std::string (err::kOversize), "message exceeds 65535 octets");
  expect_ok (SendRequest{destination, tx_power_mw, message});
}

void
Client::send_broadcast (std::string_view message, std::optional<unsigned> tx_power_mw)
{
  send_broadcast (to_bytes (message), tx_power_mw);
}

void
Client::send_broadcast (const Bytes &message, std::optional<unsigned> tx_power_mw)
{
  if (message.size () > kMaxPayloadSize)
    throw ClientError (std::string (err::kOversize), "message exceeds 65535 octets");
  expect_ok (SendBroadcastRequest{tx_power_mw, message});
}

std::optional<Message>
Client::receive ()
{
  ClientReply reply = call (ReceiveRequest{});
  if (std::holds_alternative<EmptyReply> (reply))
    return std::nullopt;
  if (auto *m = std::get_if<MsgReply> (&reply))
    return Message{m->sender, std::move (m->sender_name), std::move (m->payload)};
  throw ClientError ("bad-reply", "expected MSG or EMPTY");
}

} // namespace prawn
