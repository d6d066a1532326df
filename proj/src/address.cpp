#include "prawn/address.hpp"

namespace prawn {

std::string
TransportAddress::to_string () const
{
  if (is_sim ())
    return "sim:" + std::to_string (sim ().index);
  Ipv4Endpoint ip = ipv4 ();
  return std::to_string (ip.address >> 24) + "." + std::to_string ((ip.address >> 16) & 0xFF)
         + "." + std::to_string ((ip.address >> 8) & 0xFF) + "."
         + std::to_string (ip.address & 0xFF) + ":" + std::to_string (ip.port);
}

std::size_t
TransportAddress::hash () const
{
  if (is_sim ())
    return std::hash<std::uint64_t>{}(sim ().index);
  Ipv4Endpoint ip = ipv4 ();
  return std::hash<std::uint64_t>{}((std::uint64_t{1} << 48) | (std::uint64_t{ip.address} << 16)
                                    | ip.port);
}

} // namespace prawn
