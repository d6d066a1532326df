#ifndef PRAWN_PROTOCOL_HPP
#define PRAWN_PROTOCOL_HPP

///
/// \file protocol.hpp
/// \brief Loopback request/reply grammar between client libraries and the engine.
///
/// One request or reply per datagram, LF-terminated UTF-8 lines, payloads in
/// base64:
///
///   INFO | NBRS | RECV
///   SEND <16-hex-id> <power-mW|-> <base64>
///   SENDB <power-mW|-> <base64>
///
///   INFO k=v k=v ... | OK | EMPTY | ERR <code> <text>
///   MSG <16-hex-id> <name> <base64>
///   NBRS <count>
///   N <16-hex-id> <name|?> <Active|Dead> <period-ms> <mac> <min-power|->
///   P <power-mW> <Active|Dead> <recv>/<W> <rssi-dBm|n/a> <consec-losses>
///   T <16-hex-id> <min-power|-> <rssi-dBm|n/a> <ok|lost>
///

#include "prawn/neighbor_table.hpp"
#include "prawn/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace prawn {

using Bytes = std::vector<std::uint8_t>;

Bytes to_bytes (std::string_view text);
std::string to_text (std::span<const std::uint8_t> bytes);

std::string base64_encode (std::span<const std::uint8_t> data);
/// Strict decoder: canonical padding, no whitespace. Throws std::invalid_argument.
Bytes base64_decode (std::string_view text);

namespace err {
inline constexpr std::string_view kUnknownDestination = "unknown-destination";
inline constexpr std::string_view kOversize = "oversize";
inline constexpr std::string_view kBadRequest = "bad-request";
inline constexpr std::string_view kBadPower = "bad-power";
inline constexpr std::string_view kSendFailed = "send-failed";
} // namespace err

/// A datagram outside the grammar. code() is the ERR code the engine replies with.
class ProtocolError : public std::runtime_error
{
public:
  explicit ProtocolError (const std::string &what, std::string_view code = err::kBadRequest)
    : std::runtime_error (what), m_code (code) {}

  const std::string &code () const { return m_code; }

private:
  std::string m_code;
};

struct InfoRequest
{
  bool operator== (const InfoRequest &) const = default;
};
struct NeighborsRequest
{
  bool operator== (const NeighborsRequest &) const = default;
};
struct SendRequest
{
  NodeId destination;
  std::optional<unsigned> power_mw;
  Bytes payload;
  bool operator== (const SendRequest &) const = default;
};
struct SendBroadcastRequest
{
  std::optional<unsigned> power_mw;
  Bytes payload;
  bool operator== (const SendBroadcastRequest &) const = default;
};
struct ReceiveRequest
{
  bool operator== (const ReceiveRequest &) const = default;
};

using ClientRequest
    = std::variant<InfoRequest, NeighborsRequest, SendRequest, SendBroadcastRequest, ReceiveRequest>;

struct WireRow
{
  unsigned power_mw = 0;
  LinkState state = LinkState::Active;
  unsigned received = 0;
  unsigned window = 0;
  std::optional<int> rssi_dbm;
  unsigned consecutive_losses = 0;
  bool operator== (const WireRow &) const = default;
};

struct WireTwoHop
{
  NodeId target;
  std::optional<unsigned> min_power_mw;
  std::optional<int> rssi_dbm;
  bool lost = false;
  bool operator== (const WireTwoHop &) const = default;
};

struct WireNeighbor
{
  NodeId id;
  std::optional<std::string> name;
  LinkState state = LinkState::Active;
  unsigned beacon_period_ms = 0;
  MacAddress mac{};
  std::optional<unsigned> min_power_mw;
  std::vector<WireRow> rows;
  std::vector<WireTwoHop> two_hop;
  bool operator== (const WireNeighbor &) const = default;
};

struct InfoReply
{
  std::vector<std::pair<std::string, std::string>> fields;

  std::optional<std::string> get (std::string_view key) const;
  bool operator== (const InfoReply &) const = default;
};
struct NeighborsReply
{
  std::vector<WireNeighbor> neighbors;
  bool operator== (const NeighborsReply &) const = default;
};
struct OkReply
{
  bool operator== (const OkReply &) const = default;
};
struct ErrReply
{
  std::string code;
  std::string message;
  bool operator== (const ErrReply &) const = default;
};
struct MsgReply
{
  NodeId sender;
  std::string sender_name;
  Bytes payload;
  bool operator== (const MsgReply &) const = default;
};
struct EmptyReply
{
  bool operator== (const EmptyReply &) const = default;
};

using ClientReply
    = std::variant<InfoReply, NeighborsReply, OkReply, ErrReply, MsgReply, EmptyReply>;

/// Projection of a snapshot onto the NBRS reply grammar.
NeighborsReply to_wire (const NeighborSnapshot &snapshot);

std::string render_request (const ClientRequest &request);
/// Throws ProtocolError on anything outside the grammar.
ClientRequest parse_request (std::string_view text);

std::string render_reply (const ClientReply &reply);
/// Throws ProtocolError on anything outside the grammar.
ClientReply parse_reply (std::string_view text);

/// True when the token can travel as a single grammar word (names, info values).
bool is_wire_token (std::string_view token);

} // namespace prawn

#endif // PRAWN_PROTOCOL_HPP
