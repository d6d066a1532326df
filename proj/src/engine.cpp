#include "prawn/engine.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace prawn {

namespace {

std::string
join_levels (const std::vector<unsigned> &levels)
{
  std::string out;
  for (unsigned p : levels)
    {
      if (!out.empty ())
        out += ',';
      out += std::to_string (p);
    }
  return out;
}

std::string
format_real (double v)
{
  std::ostringstream os;
  os << v;
  return os.str ();
}

std::string
rssi_detail (std::optional<int> rssi)
{
  return rssi ? std::to_string (*rssi) : "n/a";
}

std::string
destination_detail (const Destination &dest)
{
  if (std::holds_alternative<Broadcast> (dest))
    return "to=*";
  return "to=" + std::get<TransportAddress> (dest).to_string ();
}

} // namespace

void
EngineConfig::validate () const
{
  if (node_name.empty () || node_name.size () > 255)
    throw std::invalid_argument ("node name must be 1 to 255 octets");
  if (!is_wire_token (node_name) || node_name == "?")
    throw std::invalid_argument ("node name must be a single word");
  if (beacon_period_ms == 0 || beacon_period_ms > 65535)
    throw std::invalid_argument ("beacon period must be in [1, 65535] ms");
  if (power_levels_mw.empty ())
    throw std::invalid_argument ("at least one power level is required");
  for (std::size_t i = 0; i < power_levels_mw.size (); ++i)
    {
      if (power_levels_mw[i] == 0 || power_levels_mw[i] > 255)
        throw std::invalid_argument ("power levels must be in [1, 255] mW");
      if (i > 0 && power_levels_mw[i] <= power_levels_mw[i - 1])
        throw std::invalid_argument ("power levels must be strictly ascending");
    }
  if (fixed_tx_power_mw && (*fixed_tx_power_mw == 0 || *fixed_tx_power_mw > 255))
    throw std::invalid_argument ("transmit power must be in [1, 255] mW");
  if (per_window == 0)
    throw std::invalid_argument ("PER window must be at least 1");
  if (dead_threshold == 0)
    throw std::invalid_argument ("dead threshold must be at least 1");
  if (!(grace_factor >= 1.0))
    throw std::invalid_argument ("grace factor must be at least 1");
  if (queue_bound == 0)
    throw std::invalid_argument ("queue bound must be at least 1");
  for (const auto &n : known_names)
    if (n.empty () || n.size () > 255 || !is_wire_token (n))
      throw std::invalid_argument ("known name '" + n + "' is not a valid node name");
}

std::vector<unsigned>
EngineConfig::cycle_levels () const
{
  if (fixed_tx_power_mw)
    return {*fixed_tx_power_mw};
  if (!power_control_enabled)
    return {default_power_mw ()};
  return power_levels_mw;
}

unsigned
EngineConfig::default_power_mw () const
{
  if (fixed_tx_power_mw)
    return *fixed_tx_power_mw;
  return power_levels_mw.empty () ? 0 : power_levels_mw.back ();
}

NeighborParams
EngineConfig::neighbor_params () const
{
  NeighborParams p;
  p.window = per_window;
  p.dead_threshold = dead_threshold;
  p.grace_factor = grace_factor;
  p.dead_retention_cycles = dead_retention_cycles;
  p.two_hop_stale_cycles = two_hop_stale_cycles;
  return p;
}

std::string_view
to_string (EngineEvent::Kind kind)
{
  switch (kind)
    {
    case EngineEvent::Kind::Tx:
      return "TX";
    case EngineEvent::Kind::Rx:
      return "RX";
    case EngineEvent::Kind::Loss:
      return "LOSS";
    case EngineEvent::Kind::Malformed:
      return "MALFORMED";
    case EngineEvent::Kind::Request:
      return "REQUEST";
    }
  return "?";
}

std::vector<CycleSlot>
schedule_cycle (const EngineConfig &config, Millis cycle_start)
{
  std::vector<unsigned> levels = config.cycle_levels ();
  if (levels.empty ())
    throw std::invalid_argument ("cannot schedule a cycle without power levels");
  std::vector<CycleSlot> slots;
  const Millis period = config.beacon_period_ms;
  const Millis k = static_cast<Millis> (levels.size ());
  for (Millis i = 0; i < k; ++i)
    slots.push_back (CycleSlot{cycle_start + (i * period) / k, levels[static_cast<std::size_t> (i)]});
  return slots;
}

Engine::Engine (EngineConfig config, Transport &transport, const Clock &clock)
  : m_config ((config.validate (), std::move (config))),
    m_transport (transport),
    m_clock (clock),
    m_id (node_id_from_name (m_config.node_name)),
    m_table (m_id, m_config.neighbor_params ()),
    m_levels (m_config.cycle_levels ())
{
  m_names.add (m_config.node_name);
  for (const auto &n : m_config.known_names)
    m_names.add (n);
}

void
Engine::emit (EngineEvent ev) const
{
  if (m_observer)
    m_observer (ev);
}

void
Engine::start ()
{
  m_origin = m_clock.now ();
  m_cycle = 0;
  m_slot = 0;
  m_started = true;
}

Millis
Engine::slot_time (std::uint64_t cycle, std::size_t slot) const
{
  const Millis period = m_config.beacon_period_ms;
  const Millis k = static_cast<Millis> (m_levels.size ());
  return m_origin + static_cast<Millis> (cycle) * period + (static_cast<Millis> (slot) * period) / k;
}

Millis
Engine::next_deadline () const
{
  Millis next = slot_time (m_cycle, m_slot);
  if (auto t = m_table.next_deadline ())
    next = std::min (next, *t);
  return next;
}

void
Engine::on_timer ()
{
  if (!m_started)
    return;
  const Millis now = m_clock.now ();

  std::size_t before = m_table.size ();
  auto losses = m_table.tick (now);
  for (const auto &loss : losses)
    {
      EngineEvent ev;
      ev.kind = EngineEvent::Kind::Loss;
      ev.at = loss.at;
      ev.type = PacketType::Beacon;
      ev.power_mw = loss.power_mw;
      ev.detail = "neighbor=" + m_names.display (loss.neighbor)
                  + (loss.entry_died ? " entry=Dead" : loss.row_died ? " row=Dead" : " lost");
      emit (ev);
    }
  if (!losses.empty () || m_table.size () != before)
    ++m_table_version;

  while (slot_time (m_cycle, m_slot) <= now)
    {
      if (m_slot == 0 && m_cycle > 0)
        emit_feedback ();
      emit_beacon (m_levels[m_slot]);
      if (++m_slot == m_levels.size ())
        {
          m_slot = 0;
          ++m_cycle;
        }
    }
}

void
Engine::emit_beacon (unsigned power_mw)
{
  Beacon b;
  b.tx_power_mw = static_cast<std::uint8_t> (power_mw);
  b.transmitter_id = m_id;
  b.beacon_period_ms = static_cast<std::uint16_t> (m_config.beacon_period_ms);
  b.mac = m_transport.mac ();
  b.sequence = m_sequence++;
  Frame f = encode_beacon (b);

  SendStatus st = m_transport.send (f, Broadcast{}, power_mw);
  if (st == SendStatus::Failed)
    ++m_counters.send_failures;
  else
    ++m_counters.beacons_sent;
  emit (EngineEvent{EngineEvent::Kind::Tx, m_clock.now (), PacketType::Beacon, power_mw, f.size (),
                    "seq=" + std::to_string (b.sequence) + " to=*"
                        + (st == SendStatus::Failed ? " failed" : "")});
}

void
Engine::emit_feedback ()
{
  auto packets = m_table.close_cycle ();
  if (!packets.empty ())
    ++m_table_version;
  const unsigned power = m_config.default_power_mw ();
  for (const auto &fb : packets)
    {
      Frame f = encode_feedback (fb);
      SendStatus st = m_transport.send (f, Broadcast{}, power);
      if (st == SendStatus::Failed)
        ++m_counters.send_failures;
      else
        ++m_counters.feedback_sent;
      emit (EngineEvent{EngineEvent::Kind::Tx, m_clock.now (), PacketType::Feedback, power,
                        f.size (),
                        "dest=" + m_names.display (fb.destination_id)
                            + " min=" + std::to_string (fb.min_rx_tx_power_mw)
                            + " rssi=" + std::to_string (fb.max_rx_rssi_dbm) + " to=*"
                            + (st == SendStatus::Failed ? " failed" : "")});
    }
}

void
Engine::on_frame (std::span<const std::uint8_t> frame, const RxMeta &meta)
{
  const Millis now = meta.arrival;
  try
    {
      PacketType type = peek_type (frame);
      switch (type)
        {
        case PacketType::Beacon:
          {
            Beacon b = decode_beacon (frame);
            if (b.transmitter_id == m_id)
              return;
            m_table.tick (now);
            m_table.record_beacon (b, meta.source, meta.rssi_dbm, now);
            ++m_table_version;
            emit (EngineEvent{EngineEvent::Kind::Rx, now, type, b.tx_power_mw, frame.size (),
                              "from=" + m_names.display (b.transmitter_id)
                                  + " seq=" + std::to_string (b.sequence)
                                  + " rssi=" + rssi_detail (meta.rssi_dbm)});
            break;
          }
        case PacketType::Feedback:
          {
            FeedbackPacket fb = decode_feedback (frame);
            FeedbackOutcome out = m_table.record_feedback (fb, meta.source, now);
            if (out != FeedbackOutcome::Dropped)
              ++m_table_version;
            const NeighborEntry *sender = m_table.find_by_address (meta.source);
            emit (EngineEvent{EngineEvent::Kind::Rx, now, type, 0, frame.size (),
                              "from=" + (sender ? m_names.display (sender->id)
                                                : meta.source.to_string ())
                                  + " dest=" + m_names.display (fb.destination_id)
                                  + " min=" + std::to_string (fb.min_rx_tx_power_mw)
                                  + " rssi=" + std::to_string (fb.max_rx_rssi_dbm)
                                  + (out == FeedbackOutcome::Dropped ? " dropped" : "")});
            break;
          }
        case PacketType::Data:
          {
            DataPacket d = decode_data (frame);
            ++m_counters.data_received;
            deliver_to_client (d, meta);
            emit (EngineEvent{EngineEvent::Kind::Rx, now, type, d.tx_power_mw, frame.size (),
                              "from=" + m_queue.back ().sender_name
                                  + " rssi=" + rssi_detail (meta.rssi_dbm)});
            break;
          }
        case PacketType::Reserved:
          break;
        }
    }
  catch (const DecodeError &e)
    {
      ++m_counters.malformed_frames;
      emit (EngineEvent{EngineEvent::Kind::Malformed, now, PacketType::Reserved, 0, frame.size (),
                        std::string ("from=") + meta.source.to_string () + " error=\"" + e.what ()
                            + "\""});
    }
}

void
Engine::deliver_to_client (const DataPacket &packet, const RxMeta &meta)
{
  ReceivedMessage msg;
  if (const NeighborEntry *entry = m_table.find_by_address (meta.source))
    {
      msg.sender = entry->id;
      msg.sender_name = m_names.display (entry->id);
    }
  else
    {
      msg.sender = NodeId (0);
      msg.sender_name = meta.source.to_string ();
    }
  msg.payload = packet.payload;
  msg.arrival = meta.arrival;
  m_queue.push_back (std::move (msg));
  while (m_queue.size () > m_config.queue_bound)
    {
      m_queue.pop_front ();
      ++m_counters.queue_overflow_drops;
    }
}

InfoReply
Engine::info () const
{
  InfoReply r;
  r.fields = {
      {"name", m_config.node_name},
      {"id", m_id.hex ()},
      {"short_id", m_id.short_hex ()},
      {"version", std::string (kVersion)},
      {"beacon_period_ms", std::to_string (m_config.beacon_period_ms)},
      {"neighbor_port", std::to_string (m_config.neighbor_port)},
      {"client_port", std::to_string (m_config.client_port)},
      {"interface", m_config.interface_name},
      {"power_levels", join_levels (m_config.power_levels_mw)},
      {"cycle_levels", join_levels (m_levels)},
      {"power_control", m_config.power_control_enabled && !m_config.fixed_tx_power_mw ? "on" : "off"},
      {"tx_power_mw", std::to_string (m_config.default_power_mw ())},
      {"window", std::to_string (m_config.per_window)},
      {"dead_threshold", std::to_string (m_config.dead_threshold)},
      {"grace_factor", format_real (m_config.grace_factor)},
      {"dead_retention_cycles", std::to_string (m_config.dead_retention_cycles)},
      {"queue_bound", std::to_string (m_config.queue_bound)},
      {"mac", format_mac (m_transport.mac ())},
  };
  return r;
}

ClientReply
Engine::send_data (NodeId destination, const Bytes &payload, std::optional<unsigned> power_mw)
{
  if (payload.size () > kMaxPayloadSize)
    return ErrReply{std::string (err::kOversize), "payload exceeds 65535 octets"};
  if (power_mw && (*power_mw == 0 || *power_mw > 255))
    return ErrReply{std::string (err::kBadPower), "power must be in [1, 255] mW"};
  const NeighborEntry *entry = m_table.find (destination);
  if (!entry)
    return ErrReply{std::string (err::kUnknownDestination),
                    "no neighbor with id " + destination.hex ()};

  DataPacket d;
  d.tx_power_mw = static_cast<std::uint8_t> (power_mw.value_or (0));
  d.payload = payload;
  Frame f = encode_data (d);
  const unsigned power = power_mw.value_or (m_config.default_power_mw ());
  Destination dest = entry->network_address;
  SendStatus st = m_transport.send (f, dest, power);
  emit (EngineEvent{EngineEvent::Kind::Tx, m_clock.now (), PacketType::Data, power, f.size (),
                    "dest=" + m_names.display (destination) + " " + destination_detail (dest)
                        + (st == SendStatus::Failed ? " failed" : "")});
  if (st == SendStatus::Failed)
    {
      ++m_counters.send_failures;
      return ErrReply{std::string (err::kSendFailed), "transport refused the frame"};
    }
  ++m_counters.data_sent;
  return OkReply{};
}

ClientReply
Engine::send_broadcast (const Bytes &payload, std::optional<unsigned> power_mw)
{
  if (payload.size () > kMaxPayloadSize)
    return ErrReply{std::string (err::kOversize), "payload exceeds 65535 octets"};
  if (power_mw && (*power_mw == 0 || *power_mw > 255))
    return ErrReply{std::string (err::kBadPower), "power must be in [1, 255] mW"};

  DataPacket d;
  d.tx_power_mw = static_cast<std::uint8_t> (power_mw.value_or (0));
  d.payload = payload;
  Frame f = encode_data (d);
  const unsigned power = power_mw.value_or (m_config.default_power_mw ());
  SendStatus st = m_transport.send (f, Broadcast{}, power);
  emit (EngineEvent{EngineEvent::Kind::Tx, m_clock.now (), PacketType::Data, power, f.size (),
                    std::string ("to=*") + (st == SendStatus::Failed ? " failed" : "")});
  if (st == SendStatus::Failed)
    {
      ++m_counters.send_failures;
      return ErrReply{std::string (err::kSendFailed), "transport refused the frame"};
    }
  ++m_counters.data_sent;
  return OkReply{};
}

ClientReply
Engine::handle (const ClientRequest &request)
{
  ++m_counters.requests;
  if (std::holds_alternative<InfoRequest> (request))
    return info ();
  if (std::holds_alternative<NeighborsRequest> (request))
    return to_wire (snapshot ());
  if (const auto *s = std::get_if<SendRequest> (&request))
    return send_data (s->destination, s->payload, s->power_mw);
  if (const auto *b = std::get_if<SendBroadcastRequest> (&request))
    return send_broadcast (b->payload, b->power_mw);

  if (m_queue.empty ())
    return EmptyReply{};
  ReceivedMessage msg = std::move (m_queue.front ());
  m_queue.pop_front ();
  return MsgReply{msg.sender, msg.sender_name, std::move (msg.payload)};
}

std::string
Engine::handle_request_text (std::string_view text)
{
  ClientReply reply;
  try
    {
      reply = handle (parse_request (text));
    }
  catch (const ProtocolError &e)
    {
      reply = ErrReply{e.code (), e.what ()};
    }
  emit (EngineEvent{EngineEvent::Kind::Request, m_clock.now (), PacketType::Reserved, 0,
                    text.size (), ""});
  try
    {
      return render_reply (reply);
    }
  catch (const ProtocolError &e)
    {
      return render_reply (ErrReply{std::string (err::kBadRequest), e.what ()});
    }
}

void
Engine::run (EventSource &source, const std::atomic<bool> &stop,
             const std::function<void ()> &after_event)
{
  if (!m_started)
    start ();
  on_timer ();
  while (!stop.load ())
    {
      Event ev = source.wait (next_deadline ());
      if (std::holds_alternative<TimeoutEvent> (ev))
        on_timer ();
      else if (auto *req = std::get_if<ClientRequestEvent> (&ev))
        source.reply (req->reply_to, handle_request_text (req->text));
      else if (auto *msg = std::get_if<NeighborMessageEvent> (&ev))
        on_frame (msg->frame, msg->meta);
      if (after_event)
        after_event ();
    }
}

} // namespace prawn
