#include "prawn/wire.hpp"

#include <algorithm>
#include <string>

namespace prawn {

namespace {

void
put_u16 (Frame &f, std::size_t off, std::uint16_t v)
{
  f[off] = static_cast<std::uint8_t> (v >> 8);
  f[off + 1] = static_cast<std::uint8_t> (v & 0xFF);
}

void
put_u64 (Frame &f, std::size_t off, std::uint64_t v)
{
  for (std::size_t i = 0; i < 8; ++i)
    f[off + i] = static_cast<std::uint8_t> (v >> (56 - 8 * i));
}

std::uint16_t
get_u16 (std::span<const std::uint8_t> f, std::size_t off)
{
  return static_cast<std::uint16_t> ((f[off] << 8) | f[off + 1]);
}

std::uint64_t
get_u64 (std::span<const std::uint8_t> f, std::size_t off)
{
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i)
    v = (v << 8) | f[off + i];
  return v;
}

void
expect_frame (std::span<const std::uint8_t> frame, std::size_t size, PacketType type,
              const char *name)
{
  if (frame.size () != size)
    throw DecodeError (DecodeError::Code::Length,
                       std::string (name) + " frame must be " + std::to_string (size)
                           + " octets, got " + std::to_string (frame.size ()));
  if (frame[0] != static_cast<std::uint8_t> (type))
    throw DecodeError (DecodeError::Code::Type,
                       std::string (name) + " frame has type " + std::to_string (frame[0]));
}

} // namespace

Frame
encode_beacon (const Beacon &b)
{
  Frame f (kBeaconSize, 0);
  f[0] = static_cast<std::uint8_t> (PacketType::Beacon);
  f[1] = b.tx_power_mw;
  put_u64 (f, 2, b.transmitter_id.value ());
  put_u16 (f, 10, b.beacon_period_ms);
  std::copy (b.mac.begin (), b.mac.end (), f.begin () + 12);
  put_u16 (f, 18, b.sequence);
  return f;
}

Beacon
decode_beacon (std::span<const std::uint8_t> frame)
{
  expect_frame (frame, kBeaconSize, PacketType::Beacon, "beacon");
  if (frame[1] == 0)
    throw DecodeError (DecodeError::Code::Power, "beacon transmit power is 0");
  Beacon b;
  b.tx_power_mw = frame[1];
  b.transmitter_id = NodeId (get_u64 (frame, 2));
  b.beacon_period_ms = get_u16 (frame, 10);
  std::copy (frame.begin () + 12, frame.begin () + 18, b.mac.begin ());
  b.sequence = get_u16 (frame, 18);
  return b;
}

Frame
encode_feedback (const FeedbackPacket &fb)
{
  Frame f (kFeedbackSize, 0);
  f[0] = static_cast<std::uint8_t> (PacketType::Feedback);
  put_u64 (f, 2, fb.destination_id.value ());
  f[10] = fb.min_rx_tx_power_mw;
  f[11] = static_cast<std::uint8_t> (fb.max_rx_rssi_dbm);
  return f;
}

FeedbackPacket
decode_feedback (std::span<const std::uint8_t> frame)
{
  expect_frame (frame, kFeedbackSize, PacketType::Feedback, "feedback");
  FeedbackPacket fb;
  fb.destination_id = NodeId (get_u64 (frame, 2));
  fb.min_rx_tx_power_mw = frame[10];
  fb.max_rx_rssi_dbm = static_cast<std::int8_t> (frame[11]);
  return fb;
}

Frame
encode_data (const DataPacket &d)
{
  if (d.payload.size () > kMaxPayloadSize)
    throw DecodeError (DecodeError::Code::Oversize,
                       "payload of " + std::to_string (d.payload.size ())
                           + " octets exceeds 65535");
  Frame f (kDataHeaderSize + d.payload.size ());
  f[0] = static_cast<std::uint8_t> (PacketType::Data);
  f[1] = d.tx_power_mw;
  put_u16 (f, 2, static_cast<std::uint16_t> (d.payload.size ()));
  std::copy (d.payload.begin (), d.payload.end (), f.begin () + kDataHeaderSize);
  return f;
}

DataPacket
decode_data (std::span<const std::uint8_t> frame)
{
  if (frame.size () < kDataHeaderSize)
    throw DecodeError (DecodeError::Code::Length, "data frame shorter than its header");
  if (frame[0] != static_cast<std::uint8_t> (PacketType::Data))
    throw DecodeError (DecodeError::Code::Type,
                       "data frame has type " + std::to_string (frame[0]));
  std::size_t declared = get_u16 (frame, 2);
  std::size_t available = frame.size () - kDataHeaderSize;
  if (declared > available)
    throw DecodeError (DecodeError::Code::Truncated,
                       "data frame declares " + std::to_string (declared)
                           + " payload octets, only " + std::to_string (available)
                           + " present");
  if (declared < available)
    throw DecodeError (DecodeError::Code::Length,
                       "data frame carries trailing octets after the payload");
  DataPacket d;
  d.tx_power_mw = frame[1];
  d.payload.assign (frame.begin () + kDataHeaderSize, frame.end ());
  return d;
}

PacketType
peek_type (std::span<const std::uint8_t> frame)
{
  if (frame.empty ())
    throw DecodeError (DecodeError::Code::Length, "empty frame");
  switch (frame[0])
    {
    case 1:
      return PacketType::Beacon;
    case 2:
      return PacketType::Data;
    case 3:
      return PacketType::Feedback;
    default:
      throw DecodeError (DecodeError::Code::Type,
                         "unknown packet type " + std::to_string (frame[0]));
    }
}

} // namespace prawn
