#include "prawn/engine.hpp"

#include <doctest.h>

#include <random>

using namespace prawn;

namespace {

struct Sent
{
  Frame frame;
  Destination dest;
  unsigned power;
};

class FakeTransport : public Transport
{
public:
  SendStatus send (std::span<const std::uint8_t> frame, const Destination &dest,
                   unsigned tx_power_mw) override
  {
    sent.push_back (Sent{Frame (frame.begin (), frame.end ()), dest, tx_power_mw});
    return fail ? SendStatus::Failed : SendStatus::Accepted;
  }
  MacAddress mac () const override { return {0x02, 0, 0, 0, 0, 0x01}; }

  std::vector<Sent> sent;
  bool fail = false;
};

EngineConfig
config (std::string name = "Alice")
{
  EngineConfig c;
  c.node_name = std::move (name);
  c.beacon_period_ms = 1000;
  return c;
}

Frame
beacon_frame (const std::string &from, unsigned power, std::uint16_t seq)
{
  Beacon b;
  b.tx_power_mw = static_cast<std::uint8_t> (power);
  b.transmitter_id = node_id_from_name (from);
  b.beacon_period_ms = 1000;
  b.sequence = seq;
  return encode_beacon (b);
}

RxMeta
meta (std::uint32_t idx, Millis at, std::optional<int> rssi = -60)
{
  RxMeta m;
  m.source = TransportAddress (SimNodeIndex{idx});
  m.rssi_dbm = rssi;
  m.arrival = at;
  return m;
}

void
drive (Engine &e, ManualClock &clock, Millis until)
{
  while (e.next_deadline () <= until)
    {
      clock.set (std::max (clock.now (), e.next_deadline ()));
      e.on_timer ();
    }
  clock.set (std::max (clock.now (), until));
}

} // namespace

TEST_CASE ("cycle schedule")
{
  EngineConfig c = config ();
  c.beacon_period_ms = 9000;
  auto s = schedule_cycle (c, 0);
  REQUIRE (s.size () == 3);
  CHECK (s[0] == CycleSlot{0, 1});
  CHECK (s[1] == CycleSlot{3000, 12});
  CHECK (s[2] == CycleSlot{6000, 100});

  c.beacon_period_ms = 10000;
  s = schedule_cycle (c, 500);
  CHECK (s[1].send_time == 3833);
  CHECK (s[2].send_time == 7166);

  c.fixed_tx_power_mw = 50;
  CHECK (c.cycle_levels () == std::vector<unsigned>{50});
  CHECK (c.default_power_mw () == 50);
  c.fixed_tx_power_mw.reset ();
  c.power_control_enabled = false;
  CHECK (c.cycle_levels () == std::vector<unsigned>{100});
}

TEST_CASE ("config validation")
{
  EngineConfig c = config ();
  CHECK_NOTHROW (c.validate ());
  c.power_levels_mw = {12, 1};
  CHECK_THROWS_AS (c.validate (), std::invalid_argument);
  c = config ();
  c.node_name = "two words";
  CHECK_THROWS_AS (c.validate (), std::invalid_argument);
  c = config ();
  c.beacon_period_ms = 70000;
  CHECK_THROWS_AS (c.validate (), std::invalid_argument);
  c = config ();
  c.per_window = 0;
  FakeTransport tr;
  ManualClock clock;
  CHECK_THROWS_AS (Engine (c, tr, clock), std::invalid_argument);
}

TEST_CASE ("beacons go out lowest power first with one sequence counter")
{
  FakeTransport tr;
  ManualClock clock;
  Engine e (config (), tr, clock);
  e.start ();
  e.on_timer ();
  REQUIRE (tr.sent.size () == 1);
  drive (e, clock, 2999);
  REQUIRE (tr.sent.size () == 9);
  std::vector<unsigned> powers;
  for (std::size_t i = 0; i < tr.sent.size (); ++i)
    {
      Beacon b = decode_beacon (tr.sent[i].frame);
      CHECK (b.sequence == i);
      CHECK (b.tx_power_mw == tr.sent[i].power);
      CHECK (std::holds_alternative<Broadcast> (tr.sent[i].dest));
      powers.push_back (b.tx_power_mw);
    }
  CHECK (powers == std::vector<unsigned>{1, 12, 100, 1, 12, 100, 1, 12, 100});
  CHECK (e.next_sequence () == 9);
}

TEST_CASE ("feedback precedes the first beacon of the next cycle")
{
  FakeTransport tr;
  ManualClock clock;
  Engine e (config (), tr, clock);
  e.start ();
  e.on_timer ();
  e.on_frame (beacon_frame ("Bob", 12, 0), meta (1, 100, -74));
  e.on_frame (beacon_frame ("Bob", 100, 1), meta (1, 400, -64));
  drive (e, clock, 1000);
  // 3 beacons, then feedback, then the 1 mW beacon of cycle 1.
  REQUIRE (tr.sent.size () == 5);
  FeedbackPacket fb = decode_feedback (tr.sent[3].frame);
  CHECK (fb.destination_id == node_id_from_name ("Bob"));
  CHECK (fb.min_rx_tx_power_mw == 12);
  CHECK (fb.max_rx_rssi_dbm == -64);
  CHECK (tr.sent[3].power == 100);
  CHECK (peek_type (tr.sent[4].frame) == PacketType::Beacon);
}

TEST_CASE ("client requests")
{
  FakeTransport tr;
  ManualClock clock;
  EngineConfig c = config ();
  c.known_names = {"Bob"};
  c.queue_bound = 2;
  Engine e (c, tr, clock);
  e.start ();
  e.on_frame (beacon_frame ("Bob", 100, 0), meta (1, 0));
  const NodeId bob = node_id_from_name ("Bob");

  SUBCASE ("info")
  {
    auto info = std::get<InfoReply> (e.handle (InfoRequest{}));
    CHECK (info.get ("name") == "Alice");
    CHECK (info.get ("id") == node_id_from_name ("Alice").hex ());
    CHECK (info.get ("beacon_period_ms") == "1000");
    CHECK (info.get ("power_levels") == "1,12,100");
    CHECK (info.get ("window") == "5");
    CHECK (info.get ("mac") == "02:00:00:00:00:01");
    CHECK (info.get ("version") == std::string (kVersion));
  }
  SUBCASE ("send to a neighbor")
  {
    tr.sent.clear ();
    CHECK (std::holds_alternative<OkReply> (e.handle (SendRequest{bob, std::nullopt, to_bytes ("x")})));
    REQUIRE (tr.sent.size () == 1);
    CHECK (tr.sent[0].power == 100);
    CHECK (decode_data (tr.sent[0].frame).tx_power_mw == 0);
    CHECK (std::get<TransportAddress> (tr.sent[0].dest) == TransportAddress (SimNodeIndex{1}));

    e.handle (SendRequest{bob, 12, to_bytes ("y")});
    CHECK (tr.sent[1].power == 12);
    CHECK (decode_data (tr.sent[1].frame).tx_power_mw == 12);
  }
  SUBCASE ("send errors")
  {
    auto r = e.handle (SendRequest{node_id_from_name ("Nobody"), std::nullopt, to_bytes ("x")});
    CHECK (std::get<ErrReply> (r).code == "unknown-destination");
    r = e.handle (SendRequest{bob, 0, to_bytes ("x")});
    CHECK (std::get<ErrReply> (r).code == "bad-power");
    r = e.handle (SendBroadcastRequest{std::nullopt, Bytes (kMaxPayloadSize + 1)});
    CHECK (std::get<ErrReply> (r).code == "oversize");
    tr.fail = true;
    r = e.handle (SendBroadcastRequest{std::nullopt, to_bytes ("x")});
    CHECK (std::get<ErrReply> (r).code == "send-failed");
    CHECK (e.counters ().send_failures == 1);
  }
  SUBCASE ("receive in arrival order, oldest dropped on overflow")
  {
    for (const char *text : {"one", "two", "three"})
      e.on_frame (encode_data (DataPacket{0, to_bytes (text)}), meta (1, 10));
    CHECK (e.queued_messages () == 2);
    CHECK (e.counters ().queue_overflow_drops == 1);
    auto m = std::get<MsgReply> (e.handle (ReceiveRequest{}));
    CHECK (to_text (m.payload) == "two");
    CHECK (m.sender == bob);
    CHECK (m.sender_name == "Bob");
    e.handle (ReceiveRequest{});
    CHECK (std::holds_alternative<EmptyReply> (e.handle (ReceiveRequest{})));
  }
  SUBCASE ("data from an unknown source")
  {
    e.on_frame (encode_data (DataPacket{0, to_bytes ("?")}), meta (7, 10));
    auto m = std::get<MsgReply> (e.handle (ReceiveRequest{}));
    CHECK (m.sender == NodeId (0));
    CHECK (m.sender_name == "sim:7");
  }
  SUBCASE ("malformed frames are counted and dropped")
  {
    e.on_frame (Frame{1, 2, 3}, meta (1, 10));
    e.on_frame (Frame{}, meta (1, 10));
    CHECK (e.counters ().malformed_frames == 2);
    CHECK (e.neighbors ().size () == 1);
  }
}

TEST_CASE ("request text handling never throws")
{
  FakeTransport tr;
  ManualClock clock;
  Engine e (config (), tr, clock);
  e.start ();
  std::mt19937_64 rng (1);
  for (int i = 0; i < 5000; ++i)
    {
      std::string s (rng () % 40, '\0');
      for (auto &ch : s)
        ch = static_cast<char> (rng () % 3 ? "SENDBINFORCV -=0123456789ABCDEF\n"[rng () % 32]
                                           : static_cast<char> (rng ()));
      std::string reply;
      REQUIRE_NOTHROW (reply = e.handle_request_text (s));
      REQUIRE_NOTHROW (parse_reply (reply));
    }
  CHECK (e.handle_request_text ("BOGUS\n").rfind ("ERR bad-request ", 0) == 0);
}

namespace {

class ScriptedSource : public EventSource
{
public:
  ScriptedSource (ManualClock &clock, std::atomic<bool> &stop) : m_clock (clock), m_stop (stop) {}

  Event wait (Millis deadline) override
  {
    ++calls;
    if (calls == 2)
      return ClientRequestEvent{"INFO\n", TransportAddress (SimNodeIndex{9})};
    if (calls == 3)
      return NeighborMessageEvent{beacon_frame ("Bob", 1, 0), meta (1, m_clock.now ())};
    m_clock.set (std::max (m_clock.now (), deadline));
    if (m_clock.now () >= 2500)
      m_stop = true;
    return TimeoutEvent{};
  }
  void reply (const TransportAddress &to, std::string_view text) override
  {
    replies.emplace_back (to, std::string (text));
  }

  int calls = 0;
  std::vector<std::pair<TransportAddress, std::string>> replies;

private:
  ManualClock &m_clock;
  std::atomic<bool> &m_stop;
};

} // namespace

TEST_CASE ("run loop dispatches the three event kinds")
{
  FakeTransport tr;
  ManualClock clock;
  Engine e (config (), tr, clock);
  std::atomic<bool> stop{false};
  ScriptedSource src (clock, stop);
  int after = 0;
  e.run (src, stop, [&] { ++after; });
  REQUIRE (src.replies.size () == 1);
  CHECK (src.replies[0].first == TransportAddress (SimNodeIndex{9}));
  CHECK (src.replies[0].second.rfind ("INFO name=Alice", 0) == 0);
  CHECK (e.neighbors ().size () == 1);
  CHECK (after == src.calls);
  CHECK (e.counters ().beacons_sent == 9);
}
