#include "prawn/neighbor_table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace prawn {

namespace {

Millis
strictly_after (double threshold)
{
  return static_cast<Millis> (std::floor (threshold)) + 1;
}

std::int8_t
clamp_rssi_octet (int dbm)
{
  return static_cast<std::int8_t> (std::clamp (dbm, -127, 127));
}

} // namespace

unsigned
PowerLevelStats::received_in_window () const
{
  return static_cast<unsigned> (std::count (window.begin (), window.end (), true));
}

void
NameDirectory::add (const std::string &name)
{
  m_names[node_id_from_name (name)] = name;
}

std::optional<std::string>
NameDirectory::lookup (NodeId id) const
{
  auto it = m_names.find (id);
  if (it == m_names.end ())
    return std::nullopt;
  return it->second;
}

std::string
NameDirectory::display (NodeId id) const
{
  auto name = lookup (id);
  return name ? *name : id.short_hex ();
}

NeighborTable::NeighborTable (NodeId self, NeighborParams params)
  : m_self (self), m_params (params), m_clock (std::numeric_limits<Millis>::min ())
{
  if (m_params.window == 0)
    throw std::invalid_argument ("PER window must be at least 1");
  if (m_params.dead_threshold == 0)
    throw std::invalid_argument ("dead threshold must be at least 1");
  if (!(m_params.grace_factor >= 1.0))
    throw std::invalid_argument ("grace factor must be at least 1");
}

void
NeighborTable::append_outcome (PowerLevelStats &row, bool received) const
{
  row.window.push_back (received);
  while (row.window.size () > m_params.window)
    row.window.pop_front ();
}

void
NeighborTable::record_beacon (const Beacon &beacon, const TransportAddress &source,
                              std::optional<int> rssi_dbm, Millis now)
{
  if (beacon.transmitter_id == m_self)
    return;

  auto [it, inserted] = m_entries.try_emplace (beacon.transmitter_id);
  NeighborEntry &entry = it->second;
  if (inserted)
    entry.id = beacon.transmitter_id;
  entry.mac = beacon.mac;
  entry.network_address = source;
  entry.beacon_period_ms = beacon.beacon_period_ms;

  auto [rit, row_inserted] = entry.per_power.try_emplace (beacon.tx_power_mw);
  PowerLevelStats &row = rit->second;
  if (row_inserted)
    row.power_mw = beacon.tx_power_mw;

  append_outcome (row, true);
  row.consecutive_losses = 0;
  row.losses_since_arrival = 0;
  row.last_sequence = beacon.sequence;
  row.last_arrival = now;
  row.last_rssi_dbm = rssi_dbm;
  if (rssi_dbm)
    row.max_rssi_dbm_cycle = row.max_rssi_dbm_cycle ? std::max (*row.max_rssi_dbm_cycle, *rssi_dbm)
                                                    : *rssi_dbm;
  ++row.beacons_received;
  row.state = LinkState::Active;

  entry.received_this_cycle.insert (beacon.tx_power_mw);
  entry.state = LinkState::Active;
}

Millis
NeighborTable::loss_deadline (const NeighborEntry &entry, const PowerLevelStats &row) const
{
  double period = entry.beacon_period_ms;
  double threshold = static_cast<double> (row.last_arrival)
                     + (row.losses_since_arrival + m_params.grace_factor) * period;
  return strictly_after (threshold);
}

Millis
NeighborTable::two_hop_deadline (const NeighborEntry &via, const TwoHopEntry &th) const
{
  return th.last_seen + static_cast<Millis> (m_params.two_hop_stale_cycles) * via.beacon_period_ms
         + 1;
}

Millis
NeighborTable::purge_deadline (const NeighborEntry &entry) const
{
  return entry.dead_since
         + static_cast<Millis> (m_params.dead_retention_cycles) * entry.beacon_period_ms + 1;
}

void
NeighborTable::refresh_entry_state (NeighborEntry &entry, Millis now)
{
  bool all_dead = !entry.per_power.empty ()
                  && std::all_of (entry.per_power.begin (), entry.per_power.end (),
                                  [] (const auto &kv) { return kv.second.state == LinkState::Dead; });
  if (all_dead && entry.state == LinkState::Active)
    {
      entry.state = LinkState::Dead;
      entry.dead_since = now;
    }
}

std::vector<LossEvent>
NeighborTable::tick (Millis now)
{
  std::vector<LossEvent> events;
  if (now <= m_clock)
    return events;
  m_clock = now;

  for (auto &[id, entry] : m_entries)
    {
      if (entry.beacon_period_ms == 0)
        continue;
      for (auto &[power, row] : entry.per_power)
        {
          while (now >= loss_deadline (entry, row))
            {
              append_outcome (row, false);
              ++row.consecutive_losses;
              ++row.losses_since_arrival;
              LossEvent ev{id, power, now, false, false};
              if (row.state == LinkState::Active
                  && row.consecutive_losses >= m_params.dead_threshold)
                {
                  row.state = LinkState::Dead;
                  ev.row_died = true;
                }
              events.push_back (ev);
            }
        }
      LinkState before = entry.state;
      refresh_entry_state (entry, now);
      if (before == LinkState::Active && entry.state == LinkState::Dead)
        events.push_back (LossEvent{id, 0, now, false, true});

      for (auto &th : entry.two_hop)
        if (!th.lost && now >= two_hop_deadline (entry, th))
          th.lost = true;
    }

  std::erase_if (m_entries, [&] (const auto &kv) {
    const NeighborEntry &e = kv.second;
    return e.state == LinkState::Dead && e.beacon_period_ms > 0 && now >= purge_deadline (e);
  });
  return events;
}

FeedbackOutcome
NeighborTable::record_feedback (const FeedbackPacket &fb, const TransportAddress &source,
                                Millis now)
{
  auto it = std::find_if (m_entries.begin (), m_entries.end (),
                          [&] (const auto &kv) { return kv.second.network_address == source; });
  if (it == m_entries.end ())
    {
      ++m_dropped_feedback;
      return FeedbackOutcome::Dropped;
    }
  NeighborEntry &sender = it->second;

  std::optional<unsigned> min_power;
  if (fb.min_rx_tx_power_mw != 0)
    min_power = fb.min_rx_tx_power_mw;
  std::optional<int> rssi;
  if (fb.max_rx_rssi_dbm != kRssiUnknown)
    rssi = fb.max_rx_rssi_dbm;

  if (fb.destination_id == m_self)
    {
      sender.reverse_min_power_mw = min_power;
      sender.reverse_max_rssi_dbm = rssi;
      return FeedbackOutcome::Reverse;
    }

  auto th = std::find_if (sender.two_hop.begin (), sender.two_hop.end (),
                          [&] (const TwoHopEntry &e) { return e.target == fb.destination_id; });
  if (th == sender.two_hop.end ())
    {
      TwoHopEntry entry;
      entry.via = sender.id;
      entry.target = fb.destination_id;
      auto pos = std::lower_bound (sender.two_hop.begin (), sender.two_hop.end (), entry.target,
                                   [] (const TwoHopEntry &e, NodeId t) { return e.target < t; });
      th = sender.two_hop.insert (pos, entry);
    }
  th->min_power_mw = min_power;
  th->rssi_dbm = rssi;
  th->last_seen = now;
  th->lost = !min_power.has_value ();
  return FeedbackOutcome::TwoHop;
}

std::vector<FeedbackPacket>
NeighborTable::close_cycle ()
{
  std::vector<FeedbackPacket> out;
  out.reserve (m_entries.size ());
  for (auto &[id, entry] : m_entries)
    {
      entry.min_rx_power_mw = entry.received_this_cycle.empty ()
                                  ? std::nullopt
                                  : std::optional<unsigned> (*entry.received_this_cycle.begin ());
      std::optional<int> max_rssi;
      for (auto &[power, row] : entry.per_power)
        {
          if (row.max_rssi_dbm_cycle)
            max_rssi = max_rssi ? std::max (*max_rssi, *row.max_rssi_dbm_cycle)
                                : *row.max_rssi_dbm_cycle;
          row.max_rssi_dbm_cycle.reset ();
        }
      entry.received_this_cycle.clear ();

      FeedbackPacket fb;
      fb.destination_id = id;
      fb.min_rx_tx_power_mw = static_cast<std::uint8_t> (entry.min_rx_power_mw.value_or (0));
      fb.max_rx_rssi_dbm = max_rssi ? clamp_rssi_octet (*max_rssi) : kRssiUnknown;
      out.push_back (fb);
    }
  return out;
}

std::optional<Millis>
NeighborTable::next_deadline () const
{
  std::optional<Millis> best;
  auto consider = [&] (Millis t) {
    if (!best || t < *best)
      best = t;
  };
  for (const auto &[id, entry] : m_entries)
    {
      if (entry.beacon_period_ms == 0)
        continue;
      for (const auto &[power, row] : entry.per_power)
        consider (loss_deadline (entry, row));
      for (const auto &th : entry.two_hop)
        if (!th.lost)
          consider (two_hop_deadline (entry, th));
      if (entry.state == LinkState::Dead)
        consider (purge_deadline (entry));
    }
  return best;
}

const NeighborEntry *
NeighborTable::find (NodeId id) const
{
  auto it = m_entries.find (id);
  return it == m_entries.end () ? nullptr : &it->second;
}

const NeighborEntry *
NeighborTable::find_by_address (const TransportAddress &address) const
{
  for (const auto &[id, entry] : m_entries)
    if (entry.network_address == address)
      return &entry;
  return nullptr;
}

PerFraction
NeighborTable::per (NodeId id, unsigned power_mw) const
{
  const NeighborEntry *entry = find (id);
  if (!entry)
    throw std::out_of_range ("no neighbor " + id.hex ());
  auto it = entry->per_power.find (power_mw);
  if (it == entry->per_power.end ())
    throw std::out_of_range ("no " + std::to_string (power_mw) + " mW row for neighbor "
                             + id.hex ());
  return PerFraction{m_params.window - it->second.received_in_window (), m_params.window};
}

NeighborSnapshot
NeighborTable::snapshot (const NameDirectory &names) const
{
  NeighborSnapshot snap;
  snap.taken_at = m_clock == std::numeric_limits<Millis>::min () ? 0 : m_clock;
  for (const auto &[id, entry] : m_entries)
    {
      NeighborReport r;
      r.id = id;
      r.name = names.lookup (id);
      r.state = entry.state;
      r.beacon_period_ms = entry.beacon_period_ms;
      r.mac = entry.mac;
      r.min_rx_power_mw = entry.min_rx_power_mw;
      r.reverse_min_power_mw = entry.reverse_min_power_mw;
      r.reverse_max_rssi_dbm = entry.reverse_max_rssi_dbm;
      for (const auto &[power, row] : entry.per_power)
        {
          PowerRowReport pr;
          pr.power_mw = power;
          pr.state = row.state;
          pr.received = row.received_in_window ();
          pr.window = m_params.window;
          pr.rssi_dbm = row.last_rssi_dbm;
          pr.consecutive_losses = row.consecutive_losses;
          pr.last_sequence = row.last_sequence;
          pr.beacons_received = row.beacons_received;
          pr.last_arrival = row.last_arrival;
          r.rows.push_back (pr);
        }
      for (const auto &th : entry.two_hop)
        r.two_hop.push_back (
            TwoHopReport{th.target, names.display (th.target), th.min_power_mw, th.rssi_dbm, th.lost});
      snap.neighbors.push_back (std::move (r));
    }
  return snap;
}

std::optional<unsigned>
min_rx_power (const NeighborEntry &entry)
{
  return entry.min_rx_power_mw;
}

} // namespace prawn
