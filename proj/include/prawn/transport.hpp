#ifndef PRAWN_TRANSPORT_HPP
#define PRAWN_TRANSPORT_HPP

#include "prawn/address.hpp"
#include "prawn/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace prawn {

/// Largest frame a UDP datagram can carry over IPv4.
inline constexpr std::size_t kMaxFrameSize = 65507;

struct RxMeta
{
  TransportAddress source;
  std::optional<int> rssi_dbm;
  Millis arrival = 0;
};

enum class SendStatus { Accepted, Failed };

/// Frame transport used by the engine. Receptions are pushed back to the
/// engine by whoever owns the transport (event source or simulator).
class Transport
{
public:
  virtual ~Transport () = default;

  /// Broadcast or unicast one frame at the given transmit power.
  virtual SendStatus send (std::span<const std::uint8_t> frame, const Destination &dest,
                           unsigned tx_power_mw)
      = 0;

  /// Hardware address reported in beacons.
  virtual MacAddress mac () const = 0;
};

} // namespace prawn

#endif // PRAWN_TRANSPORT_HPP
