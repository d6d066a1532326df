#ifndef PRAWN_WIRE_HPP
#define PRAWN_WIRE_HPP

///
/// \file wire.hpp
/// \brief On-air frame layouts for the three packet types.
///
/// All multi-octet integers are big-endian. Beacon and feedback frames are
/// zero-padded to their fixed sizes (24 and 16 octets); data frames carry a
/// 4-octet header followed by the payload.
///
///   Beacon   : type(1) power(1) transmitter-id(8) period(2) mac(6) seq(2) pad(4)
///   Feedback : type(1) unused(1) destination-id(8) min-power(1) max-rssi(1) pad(4)
///   Data     : type(1) power(1) payload-size(2) payload(n)
///

#include "prawn/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace prawn {

enum class PacketType : std::uint8_t
{
  Reserved = 0,
  Beacon = 1,
  Data = 2,
  Feedback = 3,
};

using Frame = std::vector<std::uint8_t>;

inline constexpr std::size_t kBeaconSize = 24;
inline constexpr std::size_t kFeedbackSize = 16;
inline constexpr std::size_t kDataHeaderSize = 4;
inline constexpr std::size_t kMaxPayloadSize = 65535;

/// Sentinel carried in the RSSI octet when the receiver could not measure it.
inline constexpr std::int8_t kRssiUnknown = -128;

struct Beacon
{
  std::uint8_t tx_power_mw = 1;
  NodeId transmitter_id;
  std::uint16_t beacon_period_ms = 0;
  MacAddress mac{};
  std::uint16_t sequence = 0;

  bool operator== (const Beacon &) const = default;
};

struct FeedbackPacket
{
  NodeId destination_id;
  /// 0 means no beacon from the destination was received this cycle.
  std::uint8_t min_rx_tx_power_mw = 0;
  std::int8_t max_rx_rssi_dbm = kRssiUnknown;

  bool operator== (const FeedbackPacket &) const = default;
};

struct DataPacket
{
  /// 0 means the engine default power.
  std::uint8_t tx_power_mw = 0;
  std::vector<std::uint8_t> payload;

  bool operator== (const DataPacket &) const = default;
};

class DecodeError : public std::runtime_error
{
public:
  enum class Code { Length, Type, Power, Truncated, Oversize };

  DecodeError (Code code, const std::string &what)
    : std::runtime_error (what), m_code (code) {}

  Code code () const { return m_code; }

private:
  Code m_code;
};

Frame encode_beacon (const Beacon &b);
Frame encode_feedback (const FeedbackPacket &f);
/// Throws DecodeError(Oversize) when the payload exceeds 65535 octets.
Frame encode_data (const DataPacket &d);

// Decoders throw DecodeError on any malformed input.
Beacon decode_beacon (std::span<const std::uint8_t> frame);
FeedbackPacket decode_feedback (std::span<const std::uint8_t> frame);
DataPacket decode_data (std::span<const std::uint8_t> frame);

/// Reads the type octet. Throws DecodeError for empty frames or unknown codes.
PacketType peek_type (std::span<const std::uint8_t> frame);

} // namespace prawn

#endif // PRAWN_WIRE_HPP
