#include "prawn/types.hpp"

#include <cstdio>
#include <stdexcept>

namespace prawn {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

int
hex_value (char c)
{
  if (c >= '0' && c <= '9')
    return c - '0';
  if (c >= 'a' && c <= 'f')
    return c - 'a' + 10;
  if (c >= 'A' && c <= 'F')
    return c - 'A' + 10;
  return -1;
}

} // namespace

std::string
NodeId::short_hex () const
{
  char buf[5];
  std::snprintf (buf, sizeof buf, "%04X", static_cast<unsigned> (m_value & 0xFFFF));
  return buf;
}

std::string
NodeId::hex () const
{
  char buf[17];
  std::snprintf (buf, sizeof buf, "%016llX", static_cast<unsigned long long> (m_value));
  return buf;
}

NodeId
NodeId::from_hex (std::string_view text)
{
  if (text.size () != 16)
    throw std::invalid_argument ("node id must be 16 hex digits");
  std::uint64_t v = 0;
  for (char c : text)
    {
      int d = hex_value (c);
      if (d < 0)
        throw std::invalid_argument ("node id contains a non-hex digit");
      v = (v << 4) | static_cast<std::uint64_t> (d);
    }
  return NodeId (v);
}

NodeId
node_id_from_name (std::string_view name)
{
  if (name.empty ())
    throw std::invalid_argument ("node name must not be empty");
  if (name.size () > 255)
    throw std::invalid_argument ("node name longer than 255 octets");
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : name)
    {
      h ^= c;
      h *= kFnvPrime;
    }
  return NodeId (h);
}

std::string
format_mac (const MacAddress &mac)
{
  char buf[18];
  std::snprintf (buf, sizeof buf, "%02X:%02X:%02X:%02X:%02X:%02X", mac[0], mac[1],
                 mac[2], mac[3], mac[4], mac[5]);
  return buf;
}

MacAddress
parse_mac (std::string_view text)
{
  if (text.size () != 17)
    throw std::invalid_argument ("malformed MAC address");
  MacAddress mac{};
  for (std::size_t i = 0; i < 6; ++i)
    {
      int hi = hex_value (text[i * 3]);
      int lo = hex_value (text[i * 3 + 1]);
      if (hi < 0 || lo < 0 || (i < 5 && text[i * 3 + 2] != ':'))
        throw std::invalid_argument ("malformed MAC address");
      mac[i] = static_cast<std::uint8_t> (hi * 16 + lo);
    }
  return mac;
}

std::string_view
to_string (LinkState state)
{
  return state == LinkState::Active ? "Active" : "Dead";
}

} // namespace prawn
