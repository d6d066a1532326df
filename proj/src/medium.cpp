#include "prawn/medium.hpp"

#include "prawn/units.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace prawn {

double
distance (Position a, Position b)
{
  return std::hypot (a.x - b.x, a.y - b.y);
}

void
MediumModel::validate () const
{
  if (!(exponent_n > 0.0))
    throw std::invalid_argument ("path loss exponent must be positive");
  if (!(per_link_loss_prob >= 0.0 && per_link_loss_prob <= 1.0))
    throw std::invalid_argument ("loss probability must lie in [0, 1]");
  if (propagation_delay_ms < 0)
    throw std::invalid_argument ("propagation delay must be non-negative");
}

double
rssi_at (const MediumModel &model, double tx_power_mw, double distance_m)
{
  if (!(distance_m > 0.0))
    throw std::domain_error ("distance must be positive");
  return mw_to_dbm (tx_power_mw) - model.pl0_db - 10.0 * model.exponent_n * std::log10 (distance_m);
}

SimMedium::SimMedium (MediumModel model) : m_model (model), m_rng (model.rng_seed)
{
  m_model.validate ();
}

std::uint32_t
SimMedium::attach (Position initial)
{
  Node n;
  n.path.push_back (Waypoint{0, initial});
  m_nodes.push_back (std::move (n));
  return static_cast<std::uint32_t> (m_nodes.size () - 1);
}

void
SimMedium::detach (std::uint32_t node)
{
  m_nodes.at (node).attached = false;
}

bool
SimMedium::attached (std::uint32_t node) const
{
  return m_nodes.at (node).attached;
}

void
SimMedium::add_waypoint (std::uint32_t node, Millis at, Position where)
{
  auto &path = m_nodes.at (node).path;
  auto pos = std::upper_bound (path.begin (), path.end (), at,
                               [] (Millis t, const Waypoint &w) { return t < w.at; });
  path.insert (pos, Waypoint{at, where});
}

Position
SimMedium::position (std::uint32_t node, Millis at) const
{
  const auto &path = m_nodes.at (node).path;
  if (at <= path.front ().at)
    return path.front ().where;
  for (std::size_t i = 1; i < path.size (); ++i)
    {
      if (at < path[i].at)
        {
          const Waypoint &a = path[i - 1];
          const Waypoint &b = path[i];
          double f = static_cast<double> (at - a.at) / static_cast<double> (b.at - a.at);
          return Position{a.where.x + f * (b.where.x - a.where.x),
                          a.where.y + f * (b.where.y - a.where.y)};
        }
    }
  return path.back ().where;
}

bool
SimMedium::lost ()
{
  double p = m_model.per_link_loss_prob;
  if (p <= 0.0)
    return false;
  double u = static_cast<double> (m_rng () >> 11) * 0x1.0p-53;
  return u < p;
}

std::vector<Delivery>
SimMedium::propagate (std::uint32_t sender, const Destination &dest, unsigned tx_power_mw,
                      std::uint8_t packet_type, Millis now)
{
  std::vector<Delivery> out;
  if (!attached (sender) || tx_power_mw == 0)
    return out;
  Position from = position (sender, now);

  auto consider = [&] (std::uint32_t rx) {
    if (rx == sender || rx >= m_nodes.size () || !m_nodes[rx].attached)
      return;
    // Co-located nodes are treated as being at the reference distance.
    double d = std::max (distance (from, position (rx, now)), 1.0);
    double rssi = rssi_at (m_model, tx_power_mw, d);
    if (rssi < m_model.sensitivity_dbm)
      return;
    if (lost ())
      return;
    if (m_drop && m_drop (FrameInfo{sender, rx, tx_power_mw, packet_type, now}))
      return;
    out.push_back (Delivery{rx, static_cast<int> (std::lround (rssi)), rssi});
  };

  if (std::holds_alternative<Broadcast> (dest))
    {
      for (std::uint32_t rx = 0; rx < m_nodes.size (); ++rx)
        consider (rx);
    }
  else
    {
      const auto &addr = std::get<TransportAddress> (dest);
      if (addr.is_sim ())
        consider (addr.sim ().index);
    }
  return out;
}

} // namespace prawn
