#include "prawn/protocol.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <limits>

namespace prawn {

namespace {

constexpr std::string_view kBase64Alphabet
    = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::vector<std::string_view>
split_words (std::string_view line)
{
  std::vector<std::string_view> words;
  std::size_t start = 0;
  while (true)
    {
      std::size_t sp = line.find (' ', start);
      if (sp == std::string_view::npos)
        {
          words.push_back (line.substr (start));
          return words;
        }
      words.push_back (line.substr (start, sp - start));
      start = sp + 1;
    }
}

std::vector<std::string_view>
split_lines (std::string_view text)
{
  if (!text.empty () && text.back () == '\n')
    text.remove_suffix (1);
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (true)
    {
      std::size_t nl = text.find ('\n', start);
      if (nl == std::string_view::npos)
        {
          lines.push_back (text.substr (start));
          return lines;
        }
      lines.push_back (text.substr (start, nl - start));
      start = nl + 1;
    }
}

std::string_view
single_line (std::string_view text)
{
  if (!text.empty () && text.back () == '\n')
    text.remove_suffix (1);
  if (text.find ('\n') != std::string_view::npos)
    throw ProtocolError ("expected a single line");
  return text;
}

template <typename T>
T
parse_number (std::string_view word, const char *what)
{
  T value{};
  auto [ptr, ec] = std::from_chars (word.data (), word.data () + word.size (), value);
  if (ec != std::errc () || ptr != word.data () + word.size () || word.empty ()
      || (word.size () > 1 && word[0] == '+'))
    throw ProtocolError (std::string ("malformed ") + what + ": '" + std::string (word) + "'");
  return value;
}

std::optional<unsigned>
parse_power (std::string_view word)
{
  if (word == "-")
    return std::nullopt;
  auto p = parse_number<unsigned> (word, "power");
  if (p == 0 || p > 255)
    throw ProtocolError ("power out of range: " + std::string (word), err::kBadPower);
  return p;
}

std::string
render_power (std::optional<unsigned> p)
{
  return p ? std::to_string (*p) : "-";
}

std::optional<int>
parse_rssi (std::string_view word)
{
  if (word == "n/a")
    return std::nullopt;
  return parse_number<int> (word, "rssi");
}

std::string
render_rssi (std::optional<int> r)
{
  return r ? std::to_string (*r) : "n/a";
}

LinkState
parse_state (std::string_view word)
{
  if (word == "Active")
    return LinkState::Active;
  if (word == "Dead")
    return LinkState::Dead;
  throw ProtocolError ("unknown link state '" + std::string (word) + "'");
}

NodeId
parse_id (std::string_view word)
{
  try
    {
      return NodeId::from_hex (word);
    }
  catch (const std::invalid_argument &e)
    {
      throw ProtocolError (e.what ());
    }
}

Bytes
parse_payload (std::string_view word)
{
  try
    {
      Bytes b = base64_decode (word);
      if (b.size () > kMaxPayloadSize)
        throw ProtocolError ("payload exceeds 65535 octets", err::kOversize);
      return b;
    }
  catch (const std::invalid_argument &e)
    {
      throw ProtocolError (e.what ());
    }
}

void
expect_words (const std::vector<std::string_view> &w, std::size_t n, const char *what)
{
  if (w.size () != n)
    throw ProtocolError (std::string ("wrong number of fields in ") + what);
}

void
require_token (std::string_view token, const char *what)
{
  if (!is_wire_token (token))
    throw ProtocolError (std::string ("cannot render ") + what + " '" + std::string (token)
                         + "' as a single word");
}

template <class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};
template <class... Ts>
overloaded (Ts...) -> overloaded<Ts...>;

} // namespace

Bytes
to_bytes (std::string_view text)
{
  return Bytes (text.begin (), text.end ());
}

std::string
to_text (std::span<const std::uint8_t> bytes)
{
  return std::string (bytes.begin (), bytes.end ());
}

std::string
base64_encode (std::span<const std::uint8_t> data)
{
  if (data.empty ())
    return {};
  std::string out (4 * ((data.size () + 2) / 3) + 1, '\0');
  int n = EVP_EncodeBlock (reinterpret_cast<unsigned char *> (out.data ()), data.data (),
                           static_cast<int> (data.size ()));
  out.resize (static_cast<std::size_t> (n));
  return out;
}

Bytes
base64_decode (std::string_view text)
{
  if (text.empty ())
    return {};
  if (text.size () % 4 != 0)
    throw std::invalid_argument ("base64 length is not a multiple of 4");
  std::size_t pad = 0;
  if (text.back () == '=')
    pad = text[text.size () - 2] == '=' ? 2 : 1;
  for (std::size_t i = 0; i < text.size () - pad; ++i)
    if (kBase64Alphabet.find (text[i]) == std::string_view::npos)
      throw std::invalid_argument ("invalid base64 character");
  if (text.size () > static_cast<std::size_t> (std::numeric_limits<int>::max ()))
    throw std::invalid_argument ("base64 input too long");

  Bytes out (3 * (text.size () / 4));
  int n = EVP_DecodeBlock (out.data (), reinterpret_cast<const unsigned char *> (text.data ()),
                           static_cast<int> (text.size ()));
  if (n < 0)
    throw std::invalid_argument ("invalid base64");
  out.resize (static_cast<std::size_t> (n) - pad);
  if (base64_encode (out) != text)
    throw std::invalid_argument ("non-canonical base64");
  return out;
}

bool
is_wire_token (std::string_view token)
{
  if (token.empty ())
    return false;
  return std::none_of (token.begin (), token.end (), [] (unsigned char c) {
    return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c < 0x20 || c == 0x7F;
  });
}

std::optional<std::string>
InfoReply::get (std::string_view key) const
{
  for (const auto &[k, v] : fields)
    if (k == key)
      return v;
  return std::nullopt;
}

NeighborsReply
to_wire (const NeighborSnapshot &snapshot)
{
  NeighborsReply reply;
  for (const auto &n : snapshot.neighbors)
    {
      WireNeighbor w;
      w.id = n.id;
      w.name = n.name;
      w.state = n.state;
      w.beacon_period_ms = n.beacon_period_ms;
      w.mac = n.mac;
      w.min_power_mw = n.min_rx_power_mw;
      for (const auto &r : n.rows)
        w.rows.push_back (
            WireRow{r.power_mw, r.state, r.received, r.window, r.rssi_dbm, r.consecutive_losses});
      for (const auto &t : n.two_hop)
        w.two_hop.push_back (WireTwoHop{t.target, t.min_power_mw, t.rssi_dbm, t.lost});
      reply.neighbors.push_back (std::move (w));
    }
  return reply;
}

std::string
render_request (const ClientRequest &request)
{
  return std::visit (
      overloaded{
          [] (const InfoRequest &) -> std::string { return "INFO\n"; },
          [] (const NeighborsRequest &) -> std::string { return "NBRS\n"; },
          [] (const ReceiveRequest &) -> std::string { return "RECV\n"; },
          [] (const SendRequest &r) -> std::string {
            return "SEND " + r.destination.hex () + " " + render_power (r.power_mw) + " "
                   + base64_encode (r.payload) + "\n";
          },
          [] (const SendBroadcastRequest &r) -> std::string {
            return "SENDB " + render_power (r.power_mw) + " " + base64_encode (r.payload) + "\n";
          },
      },
      request);
}

ClientRequest
parse_request (std::string_view text)
{
  auto w = split_words (single_line (text));
  std::string_view verb = w[0];
  if (verb == "INFO" || verb == "NBRS" || verb == "RECV")
    {
      expect_words (w, 1, "request");
      if (verb == "INFO")
        return InfoRequest{};
      if (verb == "NBRS")
        return NeighborsRequest{};
      return ReceiveRequest{};
    }
  if (verb == "SEND")
    {
      expect_words (w, 4, "SEND");
      return SendRequest{parse_id (w[1]), parse_power (w[2]), parse_payload (w[3])};
    }
  if (verb == "SENDB")
    {
      expect_words (w, 3, "SENDB");
      return SendBroadcastRequest{parse_power (w[1]), parse_payload (w[2])};
    }
  throw ProtocolError ("unknown request '" + std::string (verb) + "'");
}

std::string
render_reply (const ClientReply &reply)
{
  return std::visit (
      overloaded{
          [] (const InfoReply &r) {
            std::string out = "INFO";
            for (const auto &[k, v] : r.fields)
              {
                require_token (k, "info key");
                if (k.find ('=') != std::string::npos)
                  throw ProtocolError ("info key contains '='");
                if (!v.empty ())
                  require_token (v, "info value");
                out += " " + k + "=" + v;
              }
            return out + "\n";
          },
          [] (const OkReply &) { return std::string ("OK\n"); },
          [] (const EmptyReply &) { return std::string ("EMPTY\n"); },
          [] (const ErrReply &r) {
            require_token (r.code, "error code");
            if (r.message.find ('\n') != std::string::npos)
              throw ProtocolError ("error text contains a line feed");
            return "ERR " + r.code + " " + r.message + "\n";
          },
          [] (const MsgReply &r) {
            require_token (r.sender_name, "sender name");
            return "MSG " + r.sender.hex () + " " + r.sender_name + " " + base64_encode (r.payload)
                   + "\n";
          },
          [] (const NeighborsReply &r) {
            std::string out = "NBRS " + std::to_string (r.neighbors.size ()) + "\n";
            for (const auto &n : r.neighbors)
              {
                if (n.name)
                  {
                    require_token (*n.name, "neighbor name");
                    if (*n.name == "?")
                      throw ProtocolError ("'?' is reserved for unknown names");
                  }
                out += "N " + n.id.hex () + " " + n.name.value_or ("?") + " "
                       + std::string (to_string (n.state)) + " "
                       + std::to_string (n.beacon_period_ms) + " " + format_mac (n.mac) + " "
                       + render_power (n.min_power_mw) + "\n";
                for (const auto &p : n.rows)
                  out += "P " + std::to_string (p.power_mw) + " "
                         + std::string (to_string (p.state)) + " " + std::to_string (p.received)
                         + "/" + std::to_string (p.window) + " " + render_rssi (p.rssi_dbm) + " "
                         + std::to_string (p.consecutive_losses) + "\n";
                for (const auto &t : n.two_hop)
                  out += "T " + t.target.hex () + " " + render_power (t.min_power_mw) + " "
                         + render_rssi (t.rssi_dbm) + " " + (t.lost ? "lost" : "ok") + "\n";
              }
            return out;
          },
      },
      reply);
}

ClientReply
parse_reply (std::string_view text)
{
  auto lines = split_lines (text);
  auto head = split_words (lines[0]);
  std::string_view verb = head[0];

  if (verb != "NBRS" && lines.size () != 1)
    throw ProtocolError ("expected a single line");

  if (verb == "OK" || verb == "EMPTY")
    {
      expect_words (head, 1, "reply");
      if (verb == "OK")
        return OkReply{};
      return EmptyReply{};
    }
  if (verb == "ERR")
    {
      if (head.size () < 3)
        throw ProtocolError ("ERR reply needs a code and text");
      std::string_view line = lines[0];
      std::size_t text_at = 4 + head[1].size () + 1;
      return ErrReply{std::string (head[1]), std::string (line.substr (text_at))};
    }
  if (verb == "MSG")
    {
      expect_words (head, 4, "MSG");
      if (!is_wire_token (head[2]))
        throw ProtocolError ("malformed sender name");
      return MsgReply{parse_id (head[1]), std::string (head[2]), parse_payload (head[3])};
    }
  if (verb == "INFO")
    {
      InfoReply r;
      for (std::size_t i = 1; i < head.size (); ++i)
        {
          std::size_t eq = head[i].find ('=');
          if (eq == std::string_view::npos || eq == 0)
            throw ProtocolError ("malformed INFO field '" + std::string (head[i]) + "'");
          r.fields.emplace_back (std::string (head[i].substr (0, eq)),
                                 std::string (head[i].substr (eq + 1)));
        }
      return r;
    }
  if (verb == "NBRS")
    {
      expect_words (head, 2, "NBRS header");
      auto count = parse_number<std::size_t> (head[1], "neighbor count");
      NeighborsReply r;
      for (std::size_t i = 1; i < lines.size (); ++i)
        {
          auto w = split_words (lines[i]);
          if (w[0] == "N")
            {
              expect_words (w, 7, "N line");
              WireNeighbor n;
              n.id = parse_id (w[1]);
              if (!is_wire_token (w[2]))
                throw ProtocolError ("malformed neighbor name");
              if (w[2] != "?")
                n.name = std::string (w[2]);
              n.state = parse_state (w[3]);
              n.beacon_period_ms = parse_number<unsigned> (w[4], "beacon period");
              try
                {
                  n.mac = parse_mac (w[5]);
                }
              catch (const std::invalid_argument &e)
                {
                  throw ProtocolError (e.what ());
                }
              n.min_power_mw = parse_power (w[6]);
              r.neighbors.push_back (std::move (n));
            }
          else if (w[0] == "P" || w[0] == "T")
            {
              if (r.neighbors.empty ())
                throw ProtocolError ("row before any N line");
              WireNeighbor &n = r.neighbors.back ();
              if (w[0] == "P")
                {
                  expect_words (w, 6, "P line");
                  WireRow row;
                  row.power_mw = parse_number<unsigned> (w[1], "power");
                  row.state = parse_state (w[2]);
                  std::size_t slash = w[3].find ('/');
                  if (slash == std::string_view::npos)
                    throw ProtocolError ("malformed recv/W field");
                  row.received = parse_number<unsigned> (w[3].substr (0, slash), "recv");
                  row.window = parse_number<unsigned> (w[3].substr (slash + 1), "window");
                  row.rssi_dbm = parse_rssi (w[4]);
                  row.consecutive_losses = parse_number<unsigned> (w[5], "losses");
                  n.rows.push_back (row);
                }
              else
                {
                  expect_words (w, 5, "T line");
                  WireTwoHop t;
                  t.target = parse_id (w[1]);
                  t.min_power_mw = parse_power (w[2]);
                  t.rssi_dbm = parse_rssi (w[3]);
                  if (w[4] != "ok" && w[4] != "lost")
                    throw ProtocolError ("two-hop status must be ok or lost");
                  t.lost = w[4] == "lost";
                  n.two_hop.push_back (t);
                }
            }
          else
            throw ProtocolError ("unknown NBRS line '" + std::string (lines[i]) + "'");
        }
      if (r.neighbors.size () != count)
        throw ProtocolError ("NBRS count does not match the neighbor lines");
      return r;
    }
  throw ProtocolError ("unknown reply '" + std::string (verb) + "'");
}

} // namespace prawn
