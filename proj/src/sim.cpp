#include "prawn/sim.hpp"

#include "prawn/units.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace prawn {

std::string_view
to_string (TraceEvent::Kind kind)
{
  switch (kind)
    {
    case TraceEvent::Kind::TX:
      return "TX";
    case TraceEvent::Kind::RX:
      return "RX";
    case TraceEvent::Kind::SNAPSHOT:
      return "SNAPSHOT";
    case TraceEvent::Kind::ERR:
      return "ERR";
    case TraceEvent::Kind::STATE:
      return "STATE";
    }
  return "?";
}

std::string_view
packet_name (PacketType type)
{
  switch (type)
    {
    case PacketType::Beacon:
      return "beacon";
    case PacketType::Data:
      return "data";
    case PacketType::Feedback:
      return "feedback";
    case PacketType::Reserved:
      break;
    }
  return "-";
}

std::string
TraceEvent::line () const
{
  std::string out = "t=" + std::to_string (t) + " " + node + " " + std::string (to_string (kind));
  if (kind == Kind::TX || kind == Kind::RX)
    out += " " + std::string (packet_name (type)) + " power=" + std::to_string (power_mw)
           + " bytes=" + std::to_string (bytes);
  if (!detail.empty ())
    out += " " + detail;
  return out;
}

SendStatus
SimTransport::send (std::span<const std::uint8_t> frame, const Destination &dest,
                    unsigned tx_power_mw)
{
  return m_sim.transmit (m_index, frame, dest, tx_power_mw);
}

Simulation::Simulation (MediumModel medium) : m_medium ((medium.validate (), medium))
{
  m_clock.set (0);
}

Simulation::~Simulation () = default;

std::size_t
Simulation::add_node (NodeSpec spec)
{
  if (find (spec.name))
    throw std::invalid_argument ("duplicate node name '" + spec.name + "'");
  if (spec.start_ms < now ())
    throw std::invalid_argument ("node start time is in the past");

  const std::size_t index = m_nodes.size ();
  std::uint32_t medium_index = m_medium.attach (spec.position);
  if (medium_index != index)
    throw std::logic_error ("medium and simulation node indices diverged");

  spec.config.node_name = spec.name;
  for (const auto &other : m_nodes)
    spec.config.known_names.push_back (other.name);

  // Locally administered MAC derived from the node index.
  MacAddress mac{0x02, 0x50, 0x52, static_cast<std::uint8_t> (index >> 16),
                 static_cast<std::uint8_t> (index >> 8), static_cast<std::uint8_t> (index)};

  Node node;
  node.name = spec.name;
  node.transport = std::make_unique<SimTransport> (*this, static_cast<std::uint32_t> (index), mac);
  node.engine = std::make_unique<Engine> (spec.config, *node.transport, m_clock);
  node.channel = std::make_unique<InProcessChannel> (*node.engine);
  node.client = std::make_unique<Client> (*node.channel);
  node.engine->set_observer ([this, index] (const EngineEvent &ev) { push_trace (index, ev); });
  m_nodes.push_back (std::move (node));

  // Earlier nodes learn the newcomer's name too.
  for (std::size_t i = 0; i < index; ++i)
    m_nodes[i].engine->learn_name (spec.name);

  schedule (spec.start_ms, [this, index] {
    Node &n = m_nodes[index];
    if (n.stopped)
      return;
    n.running = true;
    n.engine->start ();
    n.engine->on_timer ();
    rearm (index);
  });
  return index;
}

std::optional<std::size_t>
Simulation::find (const std::string &name) const
{
  for (std::size_t i = 0; i < m_nodes.size (); ++i)
    if (m_nodes[i].name == name)
      return i;
  return std::nullopt;
}

const std::string &
Simulation::name (std::size_t node) const
{
  return m_nodes.at (node).name;
}

Engine &
Simulation::engine (std::size_t node)
{
  return *m_nodes.at (node).engine;
}

const Engine &
Simulation::engine (std::size_t node) const
{
  return *m_nodes.at (node).engine;
}

Client &
Simulation::client (std::size_t node)
{
  return *m_nodes.at (node).client;
}

bool
Simulation::running (std::size_t node) const
{
  return m_nodes.at (node).running;
}

void
Simulation::schedule (Millis t, std::function<void ()> fn)
{
  m_queue.push (Pending{t, m_seq++, std::move (fn)});
}

void
Simulation::at (Millis t, std::function<void ()> action)
{
  if (t < now ())
    throw std::invalid_argument ("cannot schedule an action in the past");
  schedule (t, std::move (action));
}

void
Simulation::rearm (std::size_t index)
{
  Node &n = m_nodes[index];
  if (!n.running)
    return;
  Millis next = std::max (n.engine->next_deadline (), now ());
  if (n.timer_at && *n.timer_at == next)
    return;
  n.timer_at = next;
  const std::uint64_t gen = ++n.timer_generation;
  schedule (next, [this, index, gen] {
    Node &node = m_nodes[index];
    if (!node.running || node.timer_generation != gen)
      return;
    node.timer_at.reset ();
    node.engine->on_timer ();
    rearm (index);
  });
}

void
Simulation::client_call (std::size_t node, const std::function<void (Client &)> &call)
{
  Node &n = m_nodes.at (node);
  if (!n.running)
    {
      m_trace.push_back (TraceEvent{now (), n.name, TraceEvent::Kind::ERR, PacketType::Reserved, 0,
                                    0, "error=node-stopped"});
      return;
    }
  try
    {
      call (*n.client);
    }
  catch (const ClientError &e)
    {
      m_trace.push_back (TraceEvent{now (), n.name, TraceEvent::Kind::ERR, PacketType::Reserved, 0,
                                    0, "error=" + e.code ()});
    }
  rearm (node);
}

void
Simulation::stop_node (std::size_t node)
{
  Node &n = m_nodes.at (node);
  n.running = false;
  n.stopped = true;
  ++n.timer_generation;
  n.timer_at.reset ();
  m_medium.detach (static_cast<std::uint32_t> (node));
  m_trace.push_back (TraceEvent{now (), n.name, TraceEvent::Kind::STATE, PacketType::Reserved, 0, 0,
                                "stopped"});
}

void
Simulation::set_app (std::size_t node, AppHook hook)
{
  m_nodes.at (node).app = std::move (hook);
}

NeighborSnapshot
Simulation::record_snapshot (std::size_t node)
{
  Node &n = m_nodes.at (node);
  NeighborSnapshot snap = n.engine->snapshot ();
  for (const auto &nb : snap.neighbors)
    {
      std::ostringstream os;
      os << "neighbor=" << nb.name.value_or (nb.id.short_hex ()) << " state=" << to_string (nb.state);
      for (const auto &row : nb.rows)
        {
          os << " p" << row.power_mw << "=" << to_string (row.state) << ":" << row.received << "/"
             << row.window;
          if (row.rssi_dbm)
            os << "@" << *row.rssi_dbm;
        }
      for (const auto &th : nb.two_hop)
        os << " 2hop=" << th.target_name << (th.lost ? "(lost)" : "");
      m_trace.push_back (TraceEvent{now (), n.name, TraceEvent::Kind::SNAPSHOT,
                                    PacketType::Reserved, 0, 0, os.str ()});
    }
  if (snap.neighbors.empty ())
    m_trace.push_back (TraceEvent{now (), n.name, TraceEvent::Kind::SNAPSHOT, PacketType::Reserved,
                                  0, 0, "neighbors=0"});
  return snap;
}

SendStatus
Simulation::transmit (std::size_t sender, std::span<const std::uint8_t> frame,
                      const Destination &dest, unsigned tx_power_mw)
{
  if (!m_nodes[sender].running)
    return SendStatus::Failed;
  if (m_tap)
    m_tap (sender, frame, dest, tx_power_mw);

  const std::uint8_t type = frame.empty () ? 0 : frame[0];
  auto deliveries = m_medium.propagate (static_cast<std::uint32_t> (sender), dest, tx_power_mw,
                                        type, now ());
  auto shared = std::make_shared<const Frame> (frame.begin (), frame.end ());
  const Millis arrival = now () + m_medium.model ().propagation_delay_ms;
  for (const auto &d : deliveries)
    {
      const std::size_t rx = d.receiver;
      schedule (arrival, [this, rx, sender, shared, d, type] {
        Node &node = m_nodes[rx];
        if (!node.running)
          return;
        RxMeta meta;
        meta.source = TransportAddress (SimNodeIndex{static_cast<std::uint32_t> (sender)});
        meta.rssi_dbm = d.rssi_dbm;
        meta.arrival = now ();
        node.engine->on_frame (*shared, meta);
        rearm (rx);
        if (type == static_cast<std::uint8_t> (PacketType::Data) && node.app)
          schedule (now (), [this, rx] {
            Node &n = m_nodes[rx];
            if (n.running && n.app && n.engine->queued_messages () > 0)
              {
                n.app (*n.client, now ());
                rearm (rx);
              }
          });
      });
    }
  return SendStatus::Accepted;
}

void
Simulation::push_trace (std::size_t node, const EngineEvent &ev)
{
  TraceEvent t;
  t.t = ev.at;
  t.node = m_nodes[node].name;
  t.type = ev.type;
  t.power_mw = ev.power_mw;
  t.bytes = ev.bytes;
  t.detail = ev.detail;
  switch (ev.kind)
    {
    case EngineEvent::Kind::Tx:
      t.kind = TraceEvent::Kind::TX;
      break;
    case EngineEvent::Kind::Rx:
      t.kind = TraceEvent::Kind::RX;
      break;
    case EngineEvent::Kind::Loss:
      t.kind = TraceEvent::Kind::STATE;
      t.detail = "power=" + std::to_string (ev.power_mw) + " " + ev.detail;
      break;
    case EngineEvent::Kind::Malformed:
      t.kind = TraceEvent::Kind::ERR;
      break;
    case EngineEvent::Kind::Request:
      return;
    }
  m_trace.push_back (std::move (t));
}

void
Simulation::run_until (Millis t)
{
  while (!m_queue.empty () && m_queue.top ().t <= t)
    {
      Pending p = m_queue.top ();
      m_queue.pop ();
      if (p.t > now ())
        m_clock.set (p.t);
      p.fn ();
    }
  if (t > now ())
    m_clock.set (t);
}

std::string
Simulation::trace_text () const
{
  std::string out;
  for (const auto &e : m_trace)
    out += e.line () + "\n";
  return out;
}

// Scenario files.

namespace {

std::vector<std::string>
split_words (std::string_view line)
{
  std::vector<std::string> words;
  std::istringstream is{std::string (line)};
  std::string w;
  while (is >> w)
    words.push_back (w);
  return words;
}

template <typename T>
T
parse_number (const std::string &text, const std::string &what)
{
  T value{};
  auto [ptr, ec] = std::from_chars (text.data (), text.data () + text.size (), value);
  if (ec != std::errc () || ptr != text.data () + text.size ())
    throw std::invalid_argument ("bad value '" + text + "' for " + what);
  return value;
}

std::vector<unsigned>
parse_levels (const std::string &text)
{
  std::vector<unsigned> out;
  std::string item;
  std::istringstream is (text);
  while (std::getline (is, item, ','))
    out.push_back (parse_number<unsigned> (item, "power_levels"));
  return out;
}

void
apply_engine_key (EngineConfig &cfg, const std::string &key, const std::string &value)
{
  if (key == "period_ms")
    cfg.beacon_period_ms = parse_number<unsigned> (value, key);
  else if (key == "power_levels")
    cfg.power_levels_mw = parse_levels (value);
  else if (key == "window")
    cfg.per_window = parse_number<unsigned> (value, key);
  else if (key == "dead_threshold")
    cfg.dead_threshold = parse_number<unsigned> (value, key);
  else if (key == "grace_factor")
    cfg.grace_factor = parse_number<double> (value, key);
  else if (key == "dead_retention_cycles")
    cfg.dead_retention_cycles = parse_number<unsigned> (value, key);
  else if (key == "tx_power")
    cfg.fixed_tx_power_mw = parse_number<unsigned> (value, key);
  else if (key == "power_control")
    cfg.power_control_enabled = value != "off";
  else if (key == "queue_bound")
    cfg.queue_bound = parse_number<std::size_t> (value, key);
  else
    throw std::invalid_argument ("unknown node setting '" + key + "'");
}

std::size_t
expected_args (const std::string &verb)
{
  if (verb == "move")
    return 3; // node x y
  if (verb == "send")
    return 3; // from to power|-
  if (verb == "broadcast")
    return 2; // from power|-
  if (verb == "recv" || verb == "stop" || verb == "snapshot")
    return 1;
  throw std::invalid_argument ("unknown action '" + verb + "'");
}

std::optional<unsigned>
parse_power_arg (const std::string &text)
{
  if (text == "-")
    return std::nullopt;
  return parse_number<unsigned> (text, "power");
}

} // namespace

void
Scenario::validate () const
{
  medium.validate ();
  if (duration_ms <= 0)
    throw std::invalid_argument ("duration must be positive");
  std::set<std::string> names;
  for (const auto &n : nodes)
    if (!names.insert (n.name).second)
      throw std::invalid_argument ("duplicate node name '" + n.name + "'");
  for (const auto &a : actions)
    {
      if (a.t < 0 || a.t > duration_ms)
        throw std::invalid_argument ("action time " + std::to_string (a.t) + " outside the run");
      if (a.args.empty () || !names.count (a.args[0]))
        throw std::invalid_argument ("action '" + a.verb + "' names an unknown node");
      if (a.verb == "send" && !names.count (a.args[1]))
        throw std::invalid_argument ("send names an unknown destination");
    }
}

Scenario
parse_scenario (std::string_view text)
{
  Scenario sc;
  std::istringstream is{std::string (text)};
  std::string raw;
  unsigned lineno = 0;
  while (std::getline (is, raw))
    {
      ++lineno;
      auto hash = raw.find ('#');
      std::string line = raw.substr (0, hash);
      auto words = split_words (line);
      if (words.empty ())
        continue;
      const std::string where = "line " + std::to_string (lineno) + ": ";
      try
        {
          if (words[0] == "node")
            {
              if (words.size () < 4)
                throw std::invalid_argument ("expected: node <name> <x> <y> [key=value ...]");
              ScenarioNode n;
              n.name = words[1];
              n.position = Position{parse_number<double> (words[2], "x"),
                                    parse_number<double> (words[3], "y")};
              for (std::size_t i = 4; i < words.size (); ++i)
                {
                  auto eq = words[i].find ('=');
                  if (eq == std::string::npos)
                    throw std::invalid_argument ("expected key=value, got '" + words[i] + "'");
                  n.overrides[words[i].substr (0, eq)] = words[i].substr (eq + 1);
                }
              sc.nodes.push_back (std::move (n));
            }
          else if (words[0] == "at")
            {
              if (words.size () < 3)
                throw std::invalid_argument ("expected: at <ms> <action> ...");
              ScenarioAction a;
              a.t = parse_number<Millis> (words[1], "time");
              a.verb = words[2];
              std::size_t n = expected_args (a.verb);
              if (words.size () < 3 + n)
                throw std::invalid_argument ("too few arguments for '" + a.verb + "'");
              a.args.assign (words.begin () + 3, words.begin () + 3 + static_cast<long> (n));
              bool carries_text = a.verb == "send" || a.verb == "broadcast";
              if (!carries_text && words.size () > 3 + n)
                throw std::invalid_argument ("too many arguments for '" + a.verb + "'");
              for (std::size_t i = 3 + n; i < words.size (); ++i)
                a.text += (a.text.empty () ? "" : " ") + words[i];
              if (a.verb == "move")
                {
                  parse_number<double> (a.args[1], "x");
                  parse_number<double> (a.args[2], "y");
                }
              sc.actions.push_back (std::move (a));
            }
          else
            {
              if (words.size () != 1)
                throw std::invalid_argument ("expected key=value");
              auto eq = words[0].find ('=');
              if (eq == std::string::npos)
                throw std::invalid_argument ("expected key=value");
              std::string key = words[0].substr (0, eq);
              std::string value = words[0].substr (eq + 1);
              if (key == "duration_ms")
                sc.duration_ms = parse_number<Millis> (value, key);
              else if (key == "pl0_db")
                sc.medium.pl0_db = parse_number<double> (value, key);
              else if (key == "exponent")
                sc.medium.exponent_n = parse_number<double> (value, key);
              else if (key == "sensitivity_dbm")
                sc.medium.sensitivity_dbm = parse_number<double> (value, key);
              else if (key == "loss_prob")
                sc.medium.per_link_loss_prob = parse_number<double> (value, key);
              else if (key == "seed")
                sc.medium.rng_seed = parse_number<std::uint64_t> (value, key);
              else if (key == "delay_ms")
                sc.medium.propagation_delay_ms = parse_number<Millis> (value, key);
              else
                apply_engine_key (sc.defaults, key, value);
            }
        }
      catch (const std::invalid_argument &e)
        {
          throw std::invalid_argument (where + e.what ());
        }
    }
  sc.validate ();
  return sc;
}

std::vector<TraceEvent>
run_scenario (const Scenario &scenario)
{
  scenario.validate ();
  Simulation sim (scenario.medium);
  for (const auto &n : scenario.nodes)
    {
      NodeSpec spec;
      spec.name = n.name;
      spec.position = n.position;
      spec.config = scenario.defaults;
      for (const auto &[k, v] : n.overrides)
        {
          if (k == "start_ms")
            spec.start_ms = parse_number<Millis> (v, k);
          else
            apply_engine_key (spec.config, k, v);
        }
      sim.add_node (std::move (spec));
    }

  for (const auto &a : scenario.actions)
    {
      const std::size_t node = *sim.find (a.args[0]);
      sim.at (a.t, [&sim, &a, node] {
        if (a.verb == "move")
          {
            Position to{parse_number<double> (a.args[1], "x"), parse_number<double> (a.args[2], "y")};
            sim.medium ().add_waypoint (static_cast<std::uint32_t> (node), sim.now (), to);
          }
        else if (a.verb == "stop")
          sim.stop_node (node);
        else if (a.verb == "snapshot")
          sim.record_snapshot (node);
        else if (a.verb == "send")
          {
            auto power = parse_power_arg (a.args[2]);
            sim.client_call (node, [&] (Client &c) { c.send (a.text, a.args[1], power); });
          }
        else if (a.verb == "broadcast")
          {
            auto power = parse_power_arg (a.args[1]);
            sim.client_call (node, [&] (Client &c) { c.send_broadcast (a.text, power); });
          }
        else if (a.verb == "recv")
          sim.client_call (node, [&] (Client &c) {
            while (auto m = c.receive ())
              ;
          });
      });
    }
  sim.run_until (scenario.duration_ms);
  return sim.trace ();
}

std::string
rssi_series_csv (const std::vector<TraceEvent> &trace, const std::string &node)
{
  std::string out = "t_ms,node,neighbor,power_mw,rssi_dbm\n";
  for (const auto &e : trace)
    {
      if (e.node != node || e.kind != TraceEvent::Kind::RX || e.type != PacketType::Beacon)
        continue;
      std::string from, rssi;
      for (const auto &w : split_words (e.detail))
        {
          if (w.rfind ("from=", 0) == 0)
            from = w.substr (5);
          else if (w.rfind ("rssi=", 0) == 0)
            rssi = w.substr (5);
        }
      out += std::to_string (e.t) + "," + node + "," + from + "," + std::to_string (e.power_mw)
             + "," + rssi + "\n";
    }
  return out;
}

OverheadReport
overhead (unsigned nodes, Millis period_ms, unsigned levels, unsigned neighbors_per_node,
          double data_packets_per_second)
{
  if (nodes == 0 || period_ms <= 0)
    throw std::invalid_argument ("node count and period must be positive");
  if (data_packets_per_second < 0)
    throw std::invalid_argument ("data rate must not be negative");
  const double period_s = static_cast<double> (period_ms) / 1000.0;
  OverheadReport r;
  r.beacon_bytes_per_period = static_cast<double> (kBeaconSize) * levels;
  r.feedback_bytes_per_period = static_cast<double> (kFeedbackSize) * neighbors_per_node;
  r.data_header_bytes_per_period
      = static_cast<double> (kDataHeaderSize) * data_packets_per_second * period_s;
  r.bytes_per_period
      = r.beacon_bytes_per_period + r.feedback_bytes_per_period + r.data_header_bytes_per_period;
  r.node_bits_per_second = r.bytes_per_period * 8.0 / period_s;
  r.network_bits_per_second = r.node_bits_per_second * nodes;
  return r;
}

MeasuredOverhead
measure_overhead (const std::vector<TraceEvent> &trace, const std::string &node, Millis from,
                  Millis to)
{
  MeasuredOverhead m;
  for (const auto &e : trace)
    {
      if (e.node != node || e.kind != TraceEvent::Kind::TX || e.t < from || e.t >= to)
        continue;
      if (e.detail.find ("failed") != std::string::npos)
        continue;
      switch (e.type)
        {
        case PacketType::Beacon:
          m.beacon_bytes += e.bytes;
          break;
        case PacketType::Feedback:
          m.feedback_bytes += e.bytes;
          break;
        case PacketType::Data:
          m.data_header_bytes += kDataHeaderSize;
          break;
        case PacketType::Reserved:
          break;
        }
    }
  return m;
}

} // namespace prawn
