#include "prawn/prototypes.hpp"
#include "prawn/sim.hpp"

#include <doctest.h>

using namespace prawn;

namespace {

EngineConfig
fast ()
{
  EngineConfig c;
  c.beacon_period_ms = 1000;
  return c;
}

} // namespace

TEST_CASE ("overhead formula")
{
  OverheadReport r = overhead (6, 5000, 5, 5, 10);
  CHECK (r.beacon_bytes_per_period == 120);
  CHECK (r.feedback_bytes_per_period == 80);
  CHECK (r.data_header_bytes_per_period == 200);
  CHECK (r.node_bits_per_second == 640);
  CHECK (r.network_bits_per_second == 3840);
  CHECK_THROWS_AS (overhead (0, 5000, 5, 5, 10), std::invalid_argument);
  CHECK_THROWS_AS (overhead (6, 0, 5, 5, 10), std::invalid_argument);
}

TEST_CASE ("scenario parsing")
{
  const char *text = R"(
# comment
period_ms=1000
duration_ms=5000
seed=9
node A 0 0
node B 10 0 power_levels=12,100 start_ms=20
at 1500 send A B 12 hello there
at 1600 broadcast B - all
at 2000 move B 200 0
at 2500 snapshot A
at 3000 stop B
)";
  Scenario sc = parse_scenario (text);
  CHECK (sc.defaults.beacon_period_ms == 1000);
  CHECK (sc.medium.rng_seed == 9);
  REQUIRE (sc.nodes.size () == 2);
  CHECK (sc.nodes[1].overrides.at ("power_levels") == "12,100");
  REQUIRE (sc.actions.size () == 5);
  CHECK (sc.actions[0].text == "hello there");
  CHECK (sc.actions[0].args == std::vector<std::string>{"A", "B", "12"});

  CHECK_THROWS_AS (parse_scenario ("node A 0\n"), std::invalid_argument);
  CHECK_THROWS_AS (parse_scenario ("node A 0 0\nnode A 1 1\n"), std::invalid_argument);
  CHECK_THROWS_AS (parse_scenario ("node A 0 0\nat 10 jump A\n"), std::invalid_argument);
  CHECK_THROWS_AS (parse_scenario ("node A 0 0\nat 10 stop Z\n"), std::invalid_argument);
  CHECK_THROWS_AS (parse_scenario ("duration_ms=100\nnode A 0 0\nat 500 stop A\n"),
                   std::invalid_argument);
  CHECK_THROWS_AS (parse_scenario ("bogus=1\n"), std::invalid_argument);
  CHECK_THROWS_AS (parse_scenario ("period_ms=abc\n"), std::invalid_argument);
}

TEST_CASE ("scenario runs are deterministic and log stopped-node calls")
{
  const char *text = R"(
period_ms=1000
duration_ms=6000
loss_prob=0.2
seed=4
node A 0 0
node B 20 0 start_ms=3
node C 40 5 start_ms=9
at 2500 send A B - ping
at 2600 broadcast C 100 hello
at 3000 stop B
at 3500 send B A - too late
at 4000 move C 0 10
)";
  auto a = run_scenario (parse_scenario (text));
  auto b = run_scenario (parse_scenario (text));
  CHECK (a == b);

  bool err = false;
  for (const auto &e : a)
    if (e.kind == TraceEvent::Kind::ERR && e.node == "B" && e.t == 3500)
      err = true;
  CHECK (err);
  for (const auto &e : a)
    if (e.node == "B" && e.kind == TraceEvent::Kind::TX)
      CHECK (e.t <= 3000);

  std::string changed = text;
  changed.replace (changed.find ("seed=4"), 6, "seed=5");
  CHECK (run_scenario (parse_scenario (changed)) != a);
}

TEST_CASE ("trace lines and RSSI csv")
{
  Simulation sim (MediumModel{});
  sim.add_node (NodeSpec{"A", {0, 0}, fast (), 0});
  sim.add_node (NodeSpec{"B", {10, 0}, fast (), 0});
  sim.run_until (1000);
  REQUIRE_FALSE (sim.trace ().empty ());
  CHECK (sim.trace ()[0].line () == "t=0 A TX beacon power=1 bytes=24 seq=0 to=*");
  std::string csv = rssi_series_csv (sim.trace (), "B");
  CHECK (csv.rfind ("t_ms,node,neighbor,power_mw,rssi_dbm\n", 0) == 0);
  CHECK (csv.find ("0,B,A,1,-70\n") != std::string::npos);
}

TEST_CASE ("nodes move along waypoints and neighbors die out of range")
{
  Simulation sim (MediumModel{});
  auto a = sim.add_node (NodeSpec{"A", {0, 0}, fast (), 0});
  auto b = sim.add_node (NodeSpec{"B", {10, 0}, fast (), 0});
  sim.medium ().add_waypoint (static_cast<std::uint32_t> (b), 5000, {10, 0});
  sim.medium ().add_waypoint (static_cast<std::uint32_t> (b), 6000, {500, 0});

  MonitorApp monitor;
  for (Millis t = 500; t < 12000; t += 1000)
    sim.at (t, [&] { sim.client_call (a, [&] (Client &c) { monitor.poll (c, sim.now ()); }); });
  sim.run_until (12000);

  const auto &series = monitor.series ().at ("B");
  // Only the 1 and 12 mW beacons have arrived by the first poll.
  CHECK (series.at (0).rssi_dbm == -59);
  CHECK (series.at (1).rssi_dbm == -50);
  REQUIRE (monitor.dead_at ("B"));
  CHECK (*monitor.dead_at ("B") > 6000);
  CHECK (monitor.csv ().find ("1500,B,-50,Active\n") != std::string::npos);
}

TEST_CASE ("topology sort orders by strongest signal")
{
  NeighborsReply r;
  auto nb = [] (std::string name, std::vector<std::optional<int>> rssi) {
    WireNeighbor n;
    n.id = node_id_from_name (name);
    n.name = name;
    for (auto v : rssi)
      n.rows.push_back (WireRow{1, LinkState::Active, 5, 5, v, 0});
    return n;
  };
  r.neighbors = {nb ("far", {-78}), nb ("mute", {std::nullopt}), nb ("near", {-70, -37}),
                 nb ("mid", {-54})};
  auto sorted = sort_by_signal (r);
  REQUIRE (sorted.size () == 4);
  CHECK (sorted[0].name == "near");
  CHECK (sorted[0].rssi_dbm == -37);
  CHECK (sorted[1].name == "mid");
  CHECK (sorted[2].name == "far");
  CHECK (sorted[3].name == "mute");
}

TEST_CASE ("flooding delivers once per node")
{
  EngineConfig cfg = fast ();
  cfg.power_levels_mw = {100};
  std::vector<Position> line;
  for (int i = 0; i < 4; ++i)
    line.push_back ({i * 80.0, 0});
  auto r = run_flooding (line, MediumModel{}, cfg, 0, to_bytes ("flood"));
  CHECK (r.transmissions == 4);
  CHECK (r.deliveries == std::vector<std::size_t>{0, 1, 1, 1});
}

TEST_CASE ("coded payload framing")
{
  std::map<std::uint32_t, Bytes> sent{{7, {1, 2, 3}}};
  const NodeId me (1), peer (2);
  Bytes coded = encode_coded_payload (CodedPart{me, 7, {1, 2, 3}}, CodedPart{peer, 9, {9, 9, 9, 9, 9}});
  auto got = decode_coded_payload (coded, me, sent);
  REQUIRE (got);
  CHECK (got->origin == peer);
  CHECK (got->seq == 9);
  CHECK (got->data == Bytes{9, 9, 9, 9, 9});

  CHECK_FALSE (decode_coded_payload (coded, NodeId (3), sent));
  CHECK_FALSE (decode_coded_payload (coded, me, {}));
  coded.pop_back ();
  CHECK_FALSE (decode_coded_payload (coded, me, sent));
  CHECK_FALSE (decode_coded_payload (encode_source_payload (1, {1}), me, sent));
}

TEST_CASE ("network coding on a short exchange")
{
  auto coded = run_network_coding (20, 64, true, 1);
  CHECK (coded.source_transmissions == 40);
  CHECK (coded.relay_transmissions == 20);
  CHECK (coded.coded == 20);
  CHECK (coded.bit_exact);

  auto plain = run_network_coding (20, 64, false, 1);
  CHECK (plain.total () == 80);
  CHECK (plain.bit_exact);
}
