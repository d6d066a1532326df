#ifndef PRAWN_TYPES_HPP
#define PRAWN_TYPES_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace prawn {

/// Engine-clock time in milliseconds.
using Millis = std::int64_t;

/// 64-bit node identifier carried in beacons and feedback packets.
class NodeId
{
public:
  constexpr NodeId () = default;
  constexpr explicit NodeId (std::uint64_t value) : m_value (value) {}

  constexpr std::uint64_t value () const { return m_value; }

  /// Low 16 bits as 4 uppercase hex digits, the console display form.
  std::string short_hex () const;
  /// Full id as 16 uppercase hex digits, the client-protocol form.
  std::string hex () const;

  /// Parses exactly 16 hex digits (either case). Throws std::invalid_argument.
  static NodeId from_hex (std::string_view text);

  constexpr auto operator<=> (const NodeId &) const = default;

private:
  std::uint64_t m_value = 0;
};

/// FNV-1a 64 of the name's octets. Throws std::invalid_argument when the name
/// is empty or longer than 255 octets.
NodeId node_id_from_name (std::string_view name);

using MacAddress = std::array<std::uint8_t, 6>;

/// "00:14:A7:FA:89:C2" style rendering.
std::string format_mac (const MacAddress &mac);
/// Inverse of format_mac. Throws std::invalid_argument.
MacAddress parse_mac (std::string_view text);

enum class LinkState { Active, Dead };

std::string_view to_string (LinkState state);

} // namespace prawn

template <>
struct std::hash<prawn::NodeId>
{
  std::size_t operator() (const prawn::NodeId &id) const noexcept
  {
    return std::hash<std::uint64_t>{}(id.value ());
  }
};

#endif // PRAWN_TYPES_HPP
