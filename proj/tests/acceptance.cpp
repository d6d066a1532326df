// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fails.

#include "prawn/cli.hpp"
#include "prawn/prototypes.hpp"
#include "prawn/sim.hpp"
#include "prawn/units.hpp"
#include "udp_node.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>

using namespace prawn;

namespace {

struct Outcome
{
  bool pass = true;
  std::string detail;

  void require (bool ok, const std::string &what)
  {
    if (!ok)
      {
        if (pass)
          detail.clear ();
        pass = false;
        detail += (detail.empty () ? "" : "; ") + what;
      }
  }
  void note (const std::string &what)
  {
    if (pass)
      detail += (detail.empty () ? "" : "; ") + what;
  }
};

double
seconds_since (std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double> (std::chrono::steady_clock::now () - t0).count ();
}

std::string
fmt (double v)
{
  char buf[64];
  std::snprintf (buf, sizeof buf, "%g", v);
  return buf;
}

EngineConfig
base_config (unsigned period_ms, std::vector<unsigned> levels = {1, 12, 100})
{
  EngineConfig c;
  c.beacon_period_ms = period_ms;
  c.power_levels_mw = std::move (levels);
  return c;
}

Outcome
check_overhead ()
{
  Outcome o;
  auto t0 = std::chrono::steady_clock::now ();
  OverheadReport r = overhead (6, 5000, 5, 5, 10);
  const double elapsed = seconds_since (t0);
  o.require (r.beacon_bytes_per_period == 120, "beacon " + fmt (r.beacon_bytes_per_period));
  o.require (r.feedback_bytes_per_period == 80, "feedback " + fmt (r.feedback_bytes_per_period));
  o.require (r.data_header_bytes_per_period == 200,
             "data header " + fmt (r.data_header_bytes_per_period));
  o.require (r.node_bits_per_second == 640, "node " + fmt (r.node_bits_per_second) + " bit/s");
  o.require (r.network_bits_per_second == 3840,
             "network " + fmt (r.network_bits_per_second) + " bit/s");
  o.require (elapsed < 1.0, "formula took " + fmt (elapsed) + " s");

  // Six nodes in a 5 m circle hear each other at every level.
  Simulation sim (MediumModel{});
  const EngineConfig cfg = base_config (5000, {1, 5, 12, 50, 100});
  for (int i = 0; i < 6; ++i)
    {
      const double a = i * 2 * M_PI / 6;
      sim.add_node (NodeSpec{"n" + std::to_string (i), {5 * std::cos (a), 5 * std::sin (a)}, cfg,
                             static_cast<Millis> (i * 13)});
    }
  const Millis from = 10000, cycles = 8, to = from + cycles * 5000;
  for (Millis t = 7; t < to + 1000; t += 100)
    for (std::size_t n = 0; n < 6; ++n)
      sim.at (t + n, [&sim, n] {
        sim.client_call (n, [] (Client &c) { c.send_broadcast (Bytes (32, 0x5A)); });
      });
  sim.run_until (to + 1000);

  for (std::size_t n = 0; n < 6; ++n)
    {
      MeasuredOverhead m = measure_overhead (sim.trace (), sim.name (n), from, to);
      const std::string who = sim.name (n) + ": ";
      o.require (m.beacon_bytes == 120 * cycles, who + "beacon " + std::to_string (m.beacon_bytes));
      o.require (m.feedback_bytes == 80 * cycles,
                 who + "feedback " + std::to_string (m.feedback_bytes));
      o.require (m.data_header_bytes == 200 * cycles,
                 who + "data header " + std::to_string (m.data_header_bytes));
    }
  o.note ("120/80/200 B per period, 640 bit/s node, 3840 bit/s network; sim trace matches over "
          + std::to_string (cycles) + " periods x 6 nodes");
  return o;
}

Outcome
check_dbm ()
{
  Outcome o;
  const std::pair<int, double> cases[] = {{-54, 3.9810717}, {-78, 0.0158489}, {-71, 0.0794},
                                          {-37, 199.526}};
  double worst = 0;
  for (auto [dbm, nw] : cases)
    {
      const double rel = std::fabs (dbm_to_nanowatts (dbm) - nw) / nw;
      worst = std::max (worst, rel);
      const double shown = std::stod (format_nanowatts (dbm));
      o.require (rel <= 1e-4 && std::fabs (shown - nw) / nw <= 1e-4,
                 std::to_string (dbm) + " dBm -> " + format_nanowatts (dbm) + " nW, expected "
                     + fmt (nw) + " (relative error " + fmt (rel) + ")");
    }
  o.note ("worst relative error " + fmt (worst));
  return o;
}

Outcome
check_per ()
{
  Outcome o;
  Simulation sim (MediumModel{});
  const EngineConfig cfg = base_config (1000);
  auto a = sim.add_node (NodeSpec{"A", {0, 0}, cfg, 0});
  auto b = sim.add_node (NodeSpec{"B", {10, 0}, cfg, 7});

  // Every fifth beacon of each (sender, receiver, power) stream is dropped.
  std::map<std::tuple<std::uint32_t, std::uint32_t, unsigned>, unsigned> count;
  sim.medium ().set_drop_filter ([&] (const FrameInfo &f) {
    if (f.packet_type != static_cast<std::uint8_t> (PacketType::Beacon))
      return false;
    return count[{f.sender, f.receiver, f.tx_power_mw}]++ % 5 == 4;
  });
  sim.run_until (12000);

  for (auto [self, peer] : {std::pair{a, b}, std::pair{b, a}})
    {
      const NodeId peer_id = sim.engine (peer).id ();
      auto reply = sim.client (self).neighbors ();
      o.require (reply.neighbors.size () == 1, sim.name (self) + " sees "
                                                   + std::to_string (reply.neighbors.size ()));
      if (reply.neighbors.empty ())
        continue;
      for (const auto &row : reply.neighbors[0].rows)
        o.require (row.received == 4 && row.window == 5,
                   sim.name (self) + " " + std::to_string (row.power_mw) + " mW shows "
                       + std::to_string (row.received) + "/" + std::to_string (row.window));
      for (unsigned p : cfg.power_levels_mw)
        {
          PerFraction per = sim.engine (self).neighbors ().per (peer_id, p);
          o.require (per == PerFraction{1, 5} && per.value () == 0.2,
                     sim.name (self) + " per " + std::to_string (per.lost) + "/"
                         + std::to_string (per.window));
        }
      std::string text = render_neighbor_list (sim.engine (self).snapshot (), sim.name (self));
      std::size_t shown = 0;
      for (std::size_t at = text.find ("]  4/5"); at != std::string::npos;
           at = text.find ("]  4/5", at + 1))
        ++shown;
      o.require (shown == cfg.power_levels_mw.size (),
                 sim.name (self) + " console shows 4/5 on " + std::to_string (shown) + " rows");
    }
  o.note ("every row displays 4/5, per = 1/5");
  return o;
}

Outcome
check_liveness ()
{
  Outcome o;
  Simulation sim (MediumModel{});
  const EngineConfig cfg = base_config (1000);
  auto a = sim.add_node (NodeSpec{"A", {0, 0}, cfg, 0});
  auto b = sim.add_node (NodeSpec{"B", {10, 0}, cfg, 41});
  sim.at (5200, [&] { sim.stop_node (b); });
  sim.run_until (12000);

  std::map<unsigned, Millis> last_rx;
  std::map<unsigned, std::vector<Millis>> losses;
  std::map<unsigned, Millis> dead_at;
  for (const auto &e : sim.trace ())
    {
      if (e.node != sim.name (a))
        continue;
      if (e.kind == TraceEvent::Kind::RX && e.type == PacketType::Beacon)
        last_rx[e.power_mw] = e.t;
      if (e.kind == TraceEvent::Kind::STATE && e.detail.find ("neighbor=B") != std::string::npos)
        {
          // Losses keep accruing after the row is Dead; only the first three matter.
          if (losses[e.power_mw].size () < 3)
            losses[e.power_mw].push_back (e.t);
          if (e.detail.find ("row=Dead") != std::string::npos && !dead_at.count (e.power_mw))
            dead_at[e.power_mw] = e.t;
        }
    }

  for (unsigned p : cfg.power_levels_mw)
    {
      const std::string tag = std::to_string (p) + " mW";
      o.require (last_rx.count (p), tag + " never received");
      o.require (dead_at.count (p), tag + " never Dead");
      if (!last_rx.count (p) || !dead_at.count (p))
        continue;
      const Millis t = last_rx[p];
      const std::vector<Millis> expected{t + 1501, t + 2501, t + 3501};
      o.require (losses[p] == expected, tag + " losses not at +1501/+2501/+3501");
      o.require (dead_at[p] == t + 3501,
                 tag + " Dead at " + std::to_string (dead_at[p]) + ", expected "
                     + std::to_string (t + 3501));
    }
  const NeighborEntry *entry = sim.engine (a).neighbors ().find (sim.engine (b).id ());
  o.require (entry && entry->state == LinkState::Dead, "B entry not Dead at A");
  if (entry)
    for (const auto &[p, row] : entry->per_power)
      o.require (row.state == LinkState::Dead && row.consecutive_losses >= 3,
                 std::to_string (p) + " mW row not Dead");
  o.note ("each row Dead exactly 3 missed periods after its last beacon (last arrival + 3501 ms)");
  return o;
}

Outcome
check_min_power ()
{
  Outcome o;
  MediumModel model;
  const double d = 30;
  o.require (rssi_at (model, 1, d) < model.sensitivity_dbm, "1 mW clears sensitivity at 30 m");
  o.require (rssi_at (model, 12, d) >= model.sensitivity_dbm, "12 mW below sensitivity at 30 m");

  Simulation sim (model);
  const EngineConfig cfg = base_config (1000);
  auto a = sim.add_node (NodeSpec{"A", {0, 0}, cfg, 0});
  auto b = sim.add_node (NodeSpec{"B", {d, 0}, cfg, 5});
  std::vector<FeedbackPacket> from_a;
  sim.set_frame_tap ([&] (std::size_t sender, std::span<const std::uint8_t> frame,
                          const Destination &, unsigned) {
    if (sender == a && peek_type (frame) == PacketType::Feedback)
      from_a.push_back (decode_feedback (frame));
  });
  sim.run_until (4500);

  const NeighborEntry *entry = sim.engine (a).neighbors ().find (sim.engine (b).id ());
  o.require (entry && entry->min_rx_power_mw == 12u, "min_rx_power is not 12");
  auto reply = sim.client (a).neighbors ();
  o.require (reply.neighbors.size () == 1 && reply.neighbors[0].min_power_mw == 12u,
             "NBRS min power is not 12");
  const NodeId bid = sim.engine (b).id ();
  std::size_t carrying = 0;
  for (const auto &fb : from_a)
    if (fb.destination_id == bid && fb.min_rx_tx_power_mw == 12)
      ++carrying;
  o.require (carrying >= 3, "feedback with min 12: " + std::to_string (carrying));
  o.note ("min_rx_power 12 mW; " + std::to_string (carrying) + " feedback packets carry 12");
  return o;
}

Outcome
check_two_hop ()
{
  Outcome o;
  MediumModel model;
  Simulation sim (model);
  const EngineConfig cfg = base_config (1000);
  auto a = sim.add_node (NodeSpec{"A", {0, 0}, cfg, 0});
  auto b = sim.add_node (NodeSpec{"B", {50, 0}, cfg, 0});
  auto c = sim.add_node (NodeSpec{"C", {135, 0}, cfg, 0});
  o.require (rssi_at (model, 100, 135) < model.sensitivity_dbm, "A and C in mutual range");
  sim.run_until (2 * 1000);

  const NodeId bid = sim.engine (b).id (), cid = sim.engine (c).id ();
  // What B reports about C is the min power and RSSI of C's beacons at B.
  const NeighborEntry *c_at_b = sim.engine (b).neighbors ().find (cid);
  o.require (c_at_b != nullptr, "B does not know C");
  std::optional<unsigned> b_min = c_at_b ? c_at_b->min_rx_power_mw : std::nullopt;
  const int b_rssi = static_cast<int> (std::lround (rssi_at (model, 100, 85)));

  auto reply = sim.client (a).neighbors ();
  o.require (reply.neighbors.size () == 1 && reply.neighbors[0].id == bid,
             "A's one-hop set is not {B}");
  if (reply.neighbors.size () == 1)
    {
      const std::vector<WireTwoHop> expected{WireTwoHop{cid, 100u, b_rssi, false}};
      o.require (b_min == 100u, "B's min power for C is not 100");
      o.require (reply.neighbors[0].two_hop == expected, "A's two-hop list under B differs");
    }
  o.note ("A lists C under B with (100 mW, " + std::to_string (b_rssi) + " dBm) by t=2000");
  o.require (!sim.engine (a).neighbors ().find (cid), "A hears C directly");
  return o;
}

Outcome
check_same_power_spacing ()
{
  Outcome o;
  Simulation sim (MediumModel{});
  const EngineConfig c1 = base_config (10000);
  const EngineConfig c2 = base_config (5000, {1, 5, 12, 50, 100});
  sim.add_node (NodeSpec{"A", {0, 0}, c1, 0});
  sim.add_node (NodeSpec{"B", {10, 0}, c1, 3});
  sim.add_node (NodeSpec{"C", {0, 10}, c2, 11});
  sim.run_until (12 * 10000);

  std::map<std::pair<std::string, unsigned>, std::vector<Millis>> tx;
  for (const auto &e : sim.trace ())
    if (e.kind == TraceEvent::Kind::TX && e.type == PacketType::Beacon)
      tx[{e.node, e.power_mw}].push_back (e.t);
  std::size_t gaps = 0;
  for (const auto &[key, times] : tx)
    {
      const Millis period = key.first == "C" ? 5000 : 10000;
      o.require (times.size () >= 11, key.first + " sent only " + std::to_string (times.size ()));
      for (std::size_t i = 1; i < times.size (); ++i, ++gaps)
        o.require (times[i] - times[i - 1] == period,
                   key.first + " " + std::to_string (key.second) + " mW gap "
                       + std::to_string (times[i] - times[i - 1]));
    }
  o.note (std::to_string (gaps) + " same-power gaps, all exactly one period");
  return o;
}

Outcome
check_flooding ()
{
  Outcome o;
  auto t0 = std::chrono::steady_clock::now ();
  EngineConfig cfg = base_config (1000, {100});
  std::vector<Position> chain, mesh;
  for (int i = 0; i < 5; ++i)
    chain.push_back ({i * 80.0, 0});
  for (int i = 0; i < 4; ++i)
    mesh.push_back ({(i % 2) * 3.0, (i / 2) * 3.0});
  auto c = run_flooding (chain, MediumModel{}, cfg, 0, to_bytes ("flood"));
  auto m = run_flooding (mesh, MediumModel{}, cfg, 0, to_bytes ("flood"));
  const double elapsed = seconds_since (t0);

  o.require (c.transmissions == 5, "chain transmissions " + std::to_string (c.transmissions));
  o.require (c.deliveries == std::vector<std::size_t>{0, 1, 1, 1, 1}, "chain deliveries");
  o.require (m.transmissions == 4, "mesh transmissions " + std::to_string (m.transmissions));
  o.require (m.deliveries == std::vector<std::size_t>{0, 1, 1, 1}, "mesh deliveries");
  o.require (elapsed < 5.0, "took " + fmt (elapsed) + " s");
  o.note ("chain 5 tx, mesh 4 tx, one delivery per node, " + fmt (elapsed) + " s");
  return o;
}

Outcome
check_network_coding ()
{
  Outcome o;
  auto coded = run_network_coding (1000, 256, true, 7);
  auto plain = run_network_coding (1000, 256, false, 7);
  o.require (coded.total () == 3000, "coded total " + std::to_string (coded.total ()));
  o.require (plain.total () == 4000, "plain total " + std::to_string (plain.total ()));
  o.require (coded.coded == 1000, "coded broadcasts " + std::to_string (coded.coded));
  o.require (coded.bit_exact && plain.bit_exact, "payload mismatch");
  o.require (coded.decoded_at_a == 1000 && coded.decoded_at_b == 1000,
             "decoded " + std::to_string (coded.decoded_at_a) + "/"
                 + std::to_string (coded.decoded_at_b));
  o.note ("3000 coded vs 4000 plain transmissions, 2000 payloads bit-exact");
  return o;
}

Outcome
check_hello_world ()
{
  Outcome o;
  Simulation sim (MediumModel{});
  const EngineConfig cfg = base_config (1000);
  auto alice = sim.add_node (NodeSpec{"Alice", {0, 0}, cfg, 0});
  auto bob = sim.add_node (NodeSpec{"Bob", {10, 0}, cfg, 0});
  sim.at (2000, [&] { sim.client (alice).send ("Hello World", "Bob"); });
  sim.run_until (2100);
  auto m = sim.client (bob).receive ();
  o.require (m.has_value (), "Bob received nothing");
  if (m)
    {
      o.require (m->sender_name == "Alice", "sender " + m->sender_name);
      o.require (m->sender == node_id_from_name ("Alice"), "sender id");
      o.require (m->text () == "Hello World", "payload " + m->text ());
    }
  o.require (!sim.client (bob).receive (), "second receive is not empty");
  o.note ("Bob received \"Hello World\" from Alice");
  return o;
}

Outcome
check_codec ()
{
  Outcome o;
  std::mt19937_64 rng (11);
  auto byte = [&] { return static_cast<std::uint8_t> (rng ()); };
  std::size_t roundtrips = 0;
  for (int i = 0; i < 10000; ++i)
    {
      Beacon b;
      b.tx_power_mw = static_cast<std::uint8_t> (1 + rng () % 255);
      b.transmitter_id = NodeId (rng ());
      b.beacon_period_ms = static_cast<std::uint16_t> (1 + rng () % 65535);
      for (auto &x : b.mac)
        x = byte ();
      b.sequence = static_cast<std::uint16_t> (rng ());
      Frame fb = encode_beacon (b);
      o.require (fb.size () == 24, "beacon size " + std::to_string (fb.size ()));
      o.require (decode_beacon (fb) == b, "beacon roundtrip");

      FeedbackPacket f;
      f.destination_id = NodeId (rng ());
      f.min_rx_tx_power_mw = byte ();
      f.max_rx_rssi_dbm = static_cast<std::int8_t> (byte ());
      Frame ff = encode_feedback (f);
      o.require (ff.size () == 16, "feedback size " + std::to_string (ff.size ()));
      o.require (decode_feedback (ff) == f, "feedback roundtrip");

      DataPacket d;
      d.tx_power_mw = byte ();
      d.payload.resize (i % 100 == 0 ? rng () % 65536 : rng () % 1500);
      for (auto &x : d.payload)
        x = byte ();
      Frame fd = encode_data (d);
      o.require (fd.size () == 4 + d.payload.size (), "data size");
      o.require (decode_data (fd) == d, "data roundtrip");
      roundtrips += 3;
      if (!o.pass)
        break;
    }

  std::size_t rejected = 0, fuzzed = 0;
  for (int i = 0; i < 30000; ++i, ++fuzzed)
    {
      Frame f (rng () % 40);
      for (auto &x : f)
        x = byte ();
      if (!f.empty () && rng () % 2)
        f[0] = static_cast<std::uint8_t> (1 + rng () % 3);
      try
        {
          switch (peek_type (f))
            {
            case PacketType::Beacon:
              decode_beacon (f);
              break;
            case PacketType::Feedback:
              decode_feedback (f);
              break;
            case PacketType::Data:
              decode_data (f);
              break;
            case PacketType::Reserved:
              break;
            }
        }
      catch (const DecodeError &)
        {
          ++rejected;
        }
      catch (...)
        {
          o.require (false, "decoder threw something other than DecodeError");
          break;
        }
    }
  o.note (std::to_string (roundtrips) + " roundtrips, sizes 24/16/4+n, " + std::to_string (fuzzed)
          + " fuzz decodes (" + std::to_string (rejected) + " rejected cleanly)");
  return o;
}

Outcome
check_substitutes ()
{
  Outcome o;

  // Determinism: same seed, same trace; different seed, different trace.
  const char *text = R"(
period_ms=1000
duration_ms=15000
loss_prob=0.3
seed=21
node A 0 0
node B 15 0 start_ms=4
node C 30 5 start_ms=9
at 3000 send A C - over there
at 4000 broadcast B 12 everyone
at 6000 move C 60 0
at 9000 stop A
)";
  auto t1 = run_scenario (parse_scenario (text));
  auto t2 = run_scenario (parse_scenario (text));
  std::string other = text;
  other.replace (other.find ("seed=21"), 7, "seed=22");
  auto t3 = run_scenario (parse_scenario (other));
  o.require (t1 == t2, "same seed gave different traces");
  o.require (t1 != t3, "different seed gave identical traces");

  // Request/reply bijection: 100 interleaved requests from 4 clients.
  std::size_t matched = 0, engine_requests = 0;
  {
    prawn::testing::UdpNode node ("Solo", 200);
    node.start ();
    std::atomic<std::size_t> ok{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
      threads.emplace_back ([&, t] {
        UdpClientChannel ch (node.client_port ());
        for (int i = 0; i < 25; ++i)
          {
            try
              {
                switch ((t + i) % 4)
                  {
                  case 0:
                    {
                      auto r = parse_reply (ch.exchange (render_request (InfoRequest{})));
                      auto *info = std::get_if<InfoReply> (&r);
                      ok += info && info->get ("name") == "Solo";
                      break;
                    }
                  case 1:
                    ok += std::holds_alternative<NeighborsReply> (
                        parse_reply (ch.exchange (render_request (NeighborsRequest{}))));
                    break;
                  case 2:
                    ok += std::holds_alternative<EmptyReply> (
                        parse_reply (ch.exchange (render_request (ReceiveRequest{}))));
                    break;
                  default:
                    ok += std::holds_alternative<ErrReply> (parse_reply (ch.exchange (
                        render_request (SendRequest{NodeId (t * 100 + i), std::nullopt, {1}}))));
                  }
              }
            catch (const std::exception &)
              {
              }
          }
      });
    for (auto &th : threads)
      th.join ();
    node.stop ();
    matched = ok;
    engine_requests = node.engine ().counters ().requests;
  }
  o.require (matched == 100, std::to_string (matched) + "/100 replies matched their requests");
  o.require (engine_requests == 100,
             "engine handled " + std::to_string (engine_requests) + " requests");

  // Reachability nests in power and in distance.
  MediumModel model;
  std::mt19937_64 rng (5);
  std::size_t pairs = 0;
  for (int i = 0; i < 20000; ++i, ++pairs)
    {
      const double d1 = 1 + static_cast<double> (rng () % 200000) / 1000;
      const double d2 = d1 + static_cast<double> (rng () % 50000) / 1000;
      const unsigned p1 = 1 + rng () % 255, p2 = p1 + rng () % (256 - p1);
      const auto reach = [&] (unsigned p, double d) {
        return rssi_at (model, p, d) >= model.sensitivity_dbm;
      };
      if ((reach (p1, d1) && !reach (p2, d1)) || (reach (p1, d2) && !reach (p1, d1)))
        {
          o.require (false, "nesting violated at " + fmt (d1) + " m");
          break;
        }
    }
  o.note ("identical traces for seed 21 (" + std::to_string (t1.size ())
          + " events), 100/100 replies matched, " + std::to_string (pairs)
          + " reachability pairs nest; delay/throughput tables and field plots not reproduced");
  return o;
}

} // namespace

int
main ()
{
  const std::pair<const char *, Outcome (*) ()> checks[] = {
      {"overhead", check_overhead},
      {"dbm-nanowatts", check_dbm},
      {"per-window", check_per},
      {"liveness", check_liveness},
      {"min-power", check_min_power},
      {"two-hop", check_two_hop},
      {"same-power-period", check_same_power_spacing},
      {"flooding", check_flooding},
      {"network-coding", check_network_coding},
      {"hello-world", check_hello_world},
      {"codec", check_codec},
      {"desk-scale-substitutes", check_substitutes},
  };
  int failed = 0;
  for (const auto &[name, fn] : checks)
    {
      Outcome o;
      try
        {
          o = fn ();
        }
      catch (const std::exception &e)
        {
          o.pass = false;
          o.detail = std::string ("exception: ") + e.what ();
        }
      std::printf ("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str ());
      failed += !o.pass;
    }
  return failed ? 1 : 0;
}
