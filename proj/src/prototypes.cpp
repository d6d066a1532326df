#include "prawn/prototypes.hpp"

#include "prawn/sim.hpp"

#include <algorithm>
#include <random>

namespace prawn {

namespace {

void
put_be (Bytes &out, std::uint64_t v, int octets)
{
  for (int i = octets - 1; i >= 0; --i)
    out.push_back (static_cast<std::uint8_t> (v >> (8 * i)));
}

std::uint64_t
get_be (const Bytes &in, std::size_t off, int octets)
{
  std::uint64_t v = 0;
  for (int i = 0; i < octets; ++i)
    v = (v << 8) | in[off + static_cast<std::size_t> (i)];
  return v;
}

constexpr std::uint8_t kSourceTag = 'D';
constexpr std::uint8_t kCodedTag = 'X';
constexpr std::size_t kPartHeader = 8 + 4 + 2;

std::uint64_t
data_transmissions (const std::vector<TraceEvent> &trace, const std::string &node)
{
  return static_cast<std::uint64_t> (
      std::count_if (trace.begin (), trace.end (), [&] (const TraceEvent &e) {
        return e.kind == TraceEvent::Kind::TX && e.type == PacketType::Data
               && (node.empty () || e.node == node);
      }));
}

std::optional<std::pair<std::uint32_t, Bytes>>
decode_source_payload (const Bytes &payload)
{
  if (payload.size () < 5 || payload[0] != kSourceTag)
    return std::nullopt;
  return std::make_pair (static_cast<std::uint32_t> (get_be (payload, 1, 4)),
                         Bytes (payload.begin () + 5, payload.end ()));
}

} // namespace

void
FloodingApp::originate (Client &client, const Bytes &payload)
{
  m_seen.insert (payload);
  client.send_broadcast (payload);
}

void
FloodingApp::on_data (Client &client, Millis)
{
  while (auto msg = client.receive ())
    {
      if (!m_seen.insert (msg->payload).second)
        continue;
      m_delivered.push_back (msg->payload);
      client.send_broadcast (msg->payload);
    }
}

FloodResult
run_flooding (const std::vector<Position> &positions, const MediumModel &medium,
              const EngineConfig &base, std::size_t origin, const Bytes &payload)
{
  Simulation sim (medium);
  std::vector<FloodingApp> apps (positions.size ());
  for (std::size_t i = 0; i < positions.size (); ++i)
    {
      NodeSpec spec;
      spec.name = "n" + std::to_string (i);
      spec.position = positions[i];
      spec.config = base;
      spec.start_ms = static_cast<Millis> (i) * 7;
      sim.add_node (std::move (spec));
      sim.set_app (i, [&apps, i] (Client &c, Millis t) { apps[i].on_data (c, t); });
    }
  const Millis t0 = 2 * static_cast<Millis> (base.beacon_period_ms);
  sim.at (t0, [&] { sim.client_call (origin, [&] (Client &c) { apps[origin].originate (c, payload); }); });
  sim.run_until (t0 + base.beacon_period_ms);

  FloodResult r;
  r.transmissions = data_transmissions (sim.trace (), "");
  for (const auto &app : apps)
    r.deliveries.push_back (app.delivered ().size ());
  return r;
}

Bytes
encode_source_payload (std::uint32_t seq, const Bytes &data)
{
  Bytes out;
  out.reserve (5 + data.size ());
  out.push_back (kSourceTag);
  put_be (out, seq, 4);
  out.insert (out.end (), data.begin (), data.end ());
  return out;
}

Bytes
encode_coded_payload (const CodedPart &a, const CodedPart &b)
{
  if (a.data.size () > 0xFFFF || b.data.size () > 0xFFFF)
    throw std::invalid_argument ("coded part exceeds 65535 octets");
  Bytes out;
  out.push_back (kCodedTag);
  for (const CodedPart *p : {&a, &b})
    {
      put_be (out, p->origin.value (), 8);
      put_be (out, p->seq, 4);
      put_be (out, p->data.size (), 2);
    }
  const std::size_t n = std::max (a.data.size (), b.data.size ());
  for (std::size_t i = 0; i < n; ++i)
    {
      std::uint8_t x = i < a.data.size () ? a.data[i] : 0;
      std::uint8_t y = i < b.data.size () ? b.data[i] : 0;
      out.push_back (static_cast<std::uint8_t> (x ^ y));
    }
  return out;
}

std::optional<CodedPart>
decode_coded_payload (const Bytes &payload, NodeId self, const std::map<std::uint32_t, Bytes> &sent)
{
  if (payload.size () < 1 + 2 * kPartHeader || payload[0] != kCodedTag)
    return std::nullopt;
  CodedPart parts[2];
  std::size_t off = 1;
  for (auto &p : parts)
    {
      p.origin = NodeId (get_be (payload, off, 8));
      p.seq = static_cast<std::uint32_t> (get_be (payload, off + 8, 4));
      p.data.resize (get_be (payload, off + 12, 2));
      off += kPartHeader;
    }
  const std::size_t body = payload.size () - off;
  if (body != std::max (parts[0].data.size (), parts[1].data.size ()))
    return std::nullopt;

  int mine = parts[0].origin == self ? 0 : parts[1].origin == self ? 1 : -1;
  if (mine < 0)
    return std::nullopt;
  auto own = sent.find (parts[mine].seq);
  if (own == sent.end () || own->second.size () != parts[mine].data.size ())
    return std::nullopt;

  CodedPart &other = parts[1 - mine];
  for (std::size_t i = 0; i < other.data.size (); ++i)
    {
      std::uint8_t k = i < own->second.size () ? own->second[i] : 0;
      other.data[i] = static_cast<std::uint8_t> (payload[off + i] ^ k);
    }
  return other;
}

void
RelayApp::forward_plain (Client &client, const Held &h)
{
  client.send (encode_source_payload (h.seq, h.data), other (h.origin));
  ++m_plain;
}

void
RelayApp::on_data (Client &client, Millis)
{
  while (auto msg = client.receive ())
    {
      if (msg->sender != m_a && msg->sender != m_b)
        continue;
      auto src = decode_source_payload (msg->payload);
      if (!src)
        continue;
      Held h{msg->sender, src->first, std::move (src->second)};
      if (!m_coding)
        forward_plain (client, h);
      else if (!m_standby)
        m_standby = std::move (h);
      else if (m_standby->origin != h.origin)
        {
          client.send_broadcast (encode_coded_payload (
              CodedPart{m_standby->origin, m_standby->seq, m_standby->data},
              CodedPart{h.origin, h.seq, h.data}));
          ++m_coded;
          m_standby.reset ();
        }
      else
        {
          forward_plain (client, *m_standby);
          m_standby = std::move (h);
        }
    }
}

void
RelayApp::flush (Client &client)
{
  if (m_standby)
    {
      forward_plain (client, *m_standby);
      m_standby.reset ();
    }
}

void
EndpointApp::send (Client &client, std::uint32_t seq, const Bytes &data)
{
  client.send (encode_source_payload (seq, data), m_relay);
  m_sent[seq] = data;
}

void
EndpointApp::on_data (Client &client, Millis)
{
  while (auto msg = client.receive ())
    {
      if (msg->sender != m_relay)
        continue;
      if (auto src = decode_source_payload (msg->payload))
        m_received[src->first] = std::move (src->second);
      else if (auto part = decode_coded_payload (msg->payload, m_self, m_sent))
        m_received[part->seq] = std::move (part->data);
      else
        ++m_undecodable;
    }
}

CodingResult
run_network_coding (std::size_t pairs, std::size_t max_payload, bool coding, std::uint64_t seed)
{
  if (max_payload == 0 || max_payload > kMaxPayloadSize - 5)
    throw std::invalid_argument ("payload size out of range");

  EngineConfig cfg;
  cfg.beacon_period_ms = 1000;
  cfg.power_levels_mw = {100};
  cfg.queue_bound = 4096;

  Simulation sim (MediumModel{});
  // 100 mW reaches 100 m under the default medium.
  const Position where[3] = {{0, 0}, {80, 0}, {160, 0}};
  const char *names[3] = {"A", "R", "B"};
  for (std::size_t i = 0; i < 3; ++i)
    sim.add_node (NodeSpec{names[i], where[i], cfg, static_cast<Millis> (i) * 3});

  const NodeId a = node_id_from_name ("A"), r = node_id_from_name ("R"),
               b = node_id_from_name ("B");
  EndpointApp app_a (a, r), app_b (b, r);
  RelayApp relay (a, b, coding);
  sim.set_app (0, [&] (Client &c, Millis t) { app_a.on_data (c, t); });
  sim.set_app (1, [&] (Client &c, Millis t) { relay.on_data (c, t); });
  sim.set_app (2, [&] (Client &c, Millis t) { app_b.on_data (c, t); });

  std::mt19937_64 rng (seed);
  auto random_payload = [&] {
    Bytes p (1 + rng () % max_payload);
    for (auto &octet : p)
      octet = static_cast<std::uint8_t> (rng ());
    return p;
  };

  const Millis t0 = 3000;
  for (std::size_t k = 0; k < pairs; ++k)
    {
      const Millis t = t0 + static_cast<Millis> (k) * 10;
      const auto seq = static_cast<std::uint32_t> (k);
      Bytes pa = random_payload (), pb = random_payload ();
      sim.at (t, [&, seq, pa] { sim.client_call (0, [&] (Client &c) { app_a.send (c, seq, pa); }); });
      sim.at (t + 1,
              [&, seq, pb] { sim.client_call (2, [&] (Client &c) { app_b.send (c, seq, pb); }); });
    }
  const Millis end = t0 + static_cast<Millis> (pairs) * 10 + 100;
  sim.at (end, [&] { sim.client_call (1, [&] (Client &c) { relay.flush (c); }); });
  sim.run_until (end + 100);

  CodingResult res;
  res.source_transmissions
      = data_transmissions (sim.trace (), "A") + data_transmissions (sim.trace (), "B");
  res.relay_transmissions = data_transmissions (sim.trace (), "R");
  res.coded = relay.coded ();
  res.plain = relay.plain ();
  res.decoded_at_a = app_a.received ().size ();
  res.decoded_at_b = app_b.received ().size ();
  res.bit_exact = app_a.received () == app_b.sent () && app_b.received () == app_a.sent ()
                  && app_a.sent ().size () == pairs;
  return res;
}

std::vector<RankedNeighbor>
sort_by_signal (const NeighborsReply &neighbors)
{
  std::vector<RankedNeighbor> out;
  for (const auto &n : neighbors.neighbors)
    {
      RankedNeighbor r{n.id, n.name.value_or (n.id.short_hex ()), std::nullopt};
      for (const auto &row : n.rows)
        if (row.rssi_dbm && (!r.rssi_dbm || *row.rssi_dbm > *r.rssi_dbm))
          r.rssi_dbm = row.rssi_dbm;
      out.push_back (std::move (r));
    }
  std::stable_sort (out.begin (), out.end (), [] (const RankedNeighbor &x, const RankedNeighbor &y) {
    if (x.rssi_dbm.has_value () != y.rssi_dbm.has_value ())
      return x.rssi_dbm.has_value ();
    if (x.rssi_dbm && *x.rssi_dbm != *y.rssi_dbm)
      return *x.rssi_dbm > *y.rssi_dbm;
    return x.id < y.id;
  });
  return out;
}

void
MonitorApp::poll (Client &client, Millis now)
{
  NeighborsReply reply = client.neighbors ();
  for (const auto &n : reply.neighbors)
    {
      RssiSample s;
      s.t = now;
      s.state = n.state;
      for (const auto &row : n.rows)
        if (row.state == LinkState::Active && row.rssi_dbm
            && (!s.rssi_dbm || *row.rssi_dbm > *s.rssi_dbm))
          s.rssi_dbm = row.rssi_dbm;
      m_series[n.name.value_or (n.id.short_hex ())].push_back (s);
    }
}

std::optional<Millis>
MonitorApp::dead_at (const std::string &neighbor) const
{
  auto it = m_series.find (neighbor);
  if (it == m_series.end ())
    return std::nullopt;
  for (const auto &s : it->second)
    if (s.state == LinkState::Dead)
      return s.t;
  return std::nullopt;
}

std::string
MonitorApp::csv () const
{
  std::string out = "t_ms,neighbor,rssi_dbm,state\n";
  for (const auto &[name, samples] : m_series)
    for (const auto &s : samples)
      out += std::to_string (s.t) + "," + name + ","
             + (s.rssi_dbm ? std::to_string (*s.rssi_dbm) : "") + ","
             + std::string (to_string (s.state)) + "\n";
  return out;
}

} // namespace prawn
