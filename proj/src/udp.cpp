#include "prawn/udp.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <ifaddrs.h>
#include <net/if.h>
#include <netinet/in.h>
#include <netpacket/packet.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <utility>

namespace prawn {

namespace {

sockaddr_in
to_sockaddr (Ipv4Endpoint ep)
{
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_addr.s_addr = htonl (ep.address);
  sa.sin_port = htons (ep.port);
  return sa;
}

struct InterfaceInfo
{
  std::optional<std::uint32_t> broadcast;
  MacAddress mac{};
  std::vector<std::uint32_t> local_addresses;
};

InterfaceInfo
query_interfaces (const std::string &name)
{
  InterfaceInfo info;
  ifaddrs *list = nullptr;
  if (getifaddrs (&list) != 0)
    return info;
  for (ifaddrs *ifa = list; ifa; ifa = ifa->ifa_next)
    {
      if (!ifa->ifa_addr)
        continue;
      bool ours = name == ifa->ifa_name;
      if (ifa->ifa_addr->sa_family == AF_INET)
        {
          auto *sin = reinterpret_cast<sockaddr_in *> (ifa->ifa_addr);
          info.local_addresses.push_back (ntohl (sin->sin_addr.s_addr));
          if (ours && (ifa->ifa_flags & IFF_BROADCAST) && ifa->ifa_broadaddr)
            info.broadcast
                = ntohl (reinterpret_cast<sockaddr_in *> (ifa->ifa_broadaddr)->sin_addr.s_addr);
        }
      else if (ours && ifa->ifa_addr->sa_family == AF_PACKET)
        {
          auto *ll = reinterpret_cast<sockaddr_ll *> (ifa->ifa_addr);
          if (ll->sll_halen == 6)
            std::copy (ll->sll_addr, ll->sll_addr + 6, info.mac.begin ());
        }
    }
  freeifaddrs (list);
  return info;
}

} // namespace

std::uint32_t
parse_ipv4 (const std::string &text)
{
  in_addr a{};
  if (inet_pton (AF_INET, text.c_str (), &a) != 1)
    throw std::invalid_argument ("malformed IPv4 address '" + text + "'");
  return ntohl (a.s_addr);
}

std::string
auto_ipv4_for (NodeId id)
{
  std::uint64_t v = id.value ();
  unsigned x = static_cast<unsigned> ((v >> 8) & 0xFF);
  unsigned y = static_cast<unsigned> (v & 0xFF);
  // Keep clear of the network and broadcast host numbers.
  if (y == 0)
    y = 1;
  if (y == 255)
    y = 254;
  return "10.87." + std::to_string (x) + "." + std::to_string (y);
}

UdpSocket::UdpSocket (std::uint32_t bind_address, std::uint16_t port, bool broadcast)
{
  m_fd = ::socket (AF_INET, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
  if (m_fd < 0)
    throw BindError (std::string ("socket: ") + std::strerror (errno));
  int one = 1;
  if (broadcast)
    ::setsockopt (m_fd, SOL_SOCKET, SO_BROADCAST, &one, sizeof one);
  sockaddr_in sa = to_sockaddr (Ipv4Endpoint{bind_address, port});
  if (::bind (m_fd, reinterpret_cast<sockaddr *> (&sa), sizeof sa) != 0)
    {
      int e = errno;
      ::close (m_fd);
      m_fd = -1;
      throw BindError ("cannot bind UDP port " + std::to_string (port) + ": "
                       + std::strerror (e));
    }
}

UdpSocket::~UdpSocket ()
{
  if (m_fd >= 0)
    ::close (m_fd);
}

UdpSocket::UdpSocket (UdpSocket &&other) noexcept : m_fd (std::exchange (other.m_fd, -1)) {}

UdpSocket &
UdpSocket::operator= (UdpSocket &&other) noexcept
{
  if (this != &other)
    {
      if (m_fd >= 0)
        ::close (m_fd);
      m_fd = std::exchange (other.m_fd, -1);
    }
  return *this;
}

Ipv4Endpoint
UdpSocket::local () const
{
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  if (::getsockname (m_fd, reinterpret_cast<sockaddr *> (&sa), &len) != 0)
    return {};
  return Ipv4Endpoint{ntohl (sa.sin_addr.s_addr), ntohs (sa.sin_port)};
}

bool
UdpSocket::send_to (std::span<const std::uint8_t> data, Ipv4Endpoint to) const
{
  sockaddr_in sa = to_sockaddr (to);
  ssize_t n = ::sendto (m_fd, data.data (), data.size (), 0, reinterpret_cast<sockaddr *> (&sa),
                        sizeof sa);
  return n == static_cast<ssize_t> (data.size ());
}

std::optional<std::pair<Frame, Ipv4Endpoint>>
UdpSocket::try_receive () const
{
  Frame buf (kMaxFrameSize + 1);
  sockaddr_in sa{};
  socklen_t len = sizeof sa;
  ssize_t n = ::recvfrom (m_fd, buf.data (), buf.size (), 0, reinterpret_cast<sockaddr *> (&sa),
                          &len);
  if (n < 0)
    return std::nullopt;
  buf.resize (static_cast<std::size_t> (n));
  return std::make_pair (std::move (buf),
                         Ipv4Endpoint{ntohl (sa.sin_addr.s_addr), ntohs (sa.sin_port)});
}

UdpTransport::UdpTransport (UdpTransportOptions options)
  : m_socket (options.bind_address, options.port, true)
{
  InterfaceInfo info = query_interfaces (options.interface_name);
  m_mac = info.mac;
  m_local_addresses = info.local_addresses;
  if (options.bind_address != 0)
    m_local_addresses = {options.bind_address};
  m_targets = options.broadcast_targets;
  if (m_targets.empty ())
    m_targets.push_back (Ipv4Endpoint{info.broadcast.value_or (0xFFFFFFFFu), options.port});
}

SendStatus
UdpTransport::send (std::span<const std::uint8_t> frame, const Destination &dest,
                    unsigned tx_power_mw)
{
  if (frame.size () > kMaxFrameSize || m_socket.fd () < 0)
    return SendStatus::Failed;
  m_last_power = tx_power_mw;
  if (std::holds_alternative<Broadcast> (dest))
    {
      bool ok = true;
      for (const auto &t : m_targets)
        ok = m_socket.send_to (frame, t) && ok;
      return ok ? SendStatus::Accepted : SendStatus::Failed;
    }
  const auto &addr = std::get<TransportAddress> (dest);
  if (addr.is_sim ())
    return SendStatus::Failed;
  return m_socket.send_to (frame, addr.ipv4 ()) ? SendStatus::Accepted : SendStatus::Failed;
}

bool
UdpTransport::is_own (Ipv4Endpoint from) const
{
  if (from.port != m_socket.local ().port)
    return false;
  return std::find (m_local_addresses.begin (), m_local_addresses.end (), from.address)
         != m_local_addresses.end ();
}

std::optional<std::pair<Frame, RxMeta>>
UdpTransport::try_receive (Millis now)
{
  while (auto got = m_socket.try_receive ())
    {
      if (is_own (got->second))
        continue;
      RxMeta meta;
      meta.source = TransportAddress (got->second);
      meta.arrival = now;
      return std::make_pair (std::move (got->first), meta);
    }
  return std::nullopt;
}

UdpEventSource::UdpEventSource (UdpTransport &transport, std::uint16_t client_port,
                                const Clock &clock, std::chrono::milliseconds max_wait)
  : m_transport (transport),
    m_client (0x7F000001u, client_port, false),
    m_clock (clock),
    m_max_wait (max_wait)
{
}

Event
UdpEventSource::wait (Millis deadline)
{
  while (true)
    {
      Millis now = m_clock.now ();
      if (now >= deadline)
        return TimeoutEvent{};
      if (auto f = m_transport.try_receive (now))
        return NeighborMessageEvent{std::move (f->first), f->second};
      if (auto req = m_client.try_receive ())
        return ClientRequestEvent{std::string (req->first.begin (), req->first.end ()),
                                  TransportAddress (req->second)};

      Millis budget = std::min<Millis> (deadline - now, m_max_wait.count ());
      pollfd fds[2] = {{m_transport.fd (), POLLIN, 0}, {m_client.fd (), POLLIN, 0}};
      int rc = ::poll (fds, 2, static_cast<int> (budget));
      if (rc == 0)
        return TimeoutEvent{};
      if (rc < 0 && errno != EINTR)
        return TimeoutEvent{};
    }
}

void
UdpEventSource::reply (const TransportAddress &to, std::string_view text)
{
  if (to.is_sim ())
    return;
  m_client.send_to (std::span (reinterpret_cast<const std::uint8_t *> (text.data ()), text.size ()),
                    to.ipv4 ());
}

} // namespace prawn
