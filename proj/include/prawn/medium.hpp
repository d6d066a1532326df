#ifndef PRAWN_MEDIUM_HPP
#define PRAWN_MEDIUM_HPP

#include "prawn/address.hpp"
#include "prawn/types.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace prawn {

struct Position
{
  double x = 0.0;
  double y = 0.0;
};

double distance (Position a, Position b);

/// Log-distance path loss with a receiver sensitivity threshold and optional
/// Bernoulli frame loss.
struct MediumModel
{
  /// Path loss at the 1 m reference distance.
  double pl0_db = 40.0;
  double exponent_n = 3.0;
  double sensitivity_dbm = -80.0;
  double per_link_loss_prob = 0.0;
  std::uint64_t rng_seed = 1;
  Millis propagation_delay_ms = 0;

  /// Throws std::invalid_argument on out-of-range parameters.
  void validate () const;
};

/// 10 log10(p) - PL0 - 10 n log10(d). Throws std::domain_error for d <= 0 or p <= 0.
double rssi_at (const MediumModel &model, double tx_power_mw, double distance_m);

struct FrameInfo
{
  std::uint32_t sender = 0;
  std::uint32_t receiver = 0;
  unsigned tx_power_mw = 0;
  std::uint8_t packet_type = 0;
  Millis at = 0;
};

struct Delivery
{
  std::uint32_t receiver = 0;
  int rssi_dbm = 0;
  double rssi_exact_dbm = 0.0;
};

///
/// The shared simulated channel. Nodes move along piecewise-linear waypoint
/// paths; reachability is decided per receiver at send time.
///
class SimMedium
{
public:
  /// Returns true to drop the frame for this receiver.
  using DropFilter = std::function<bool (const FrameInfo &)>;

  explicit SimMedium (MediumModel model);

  const MediumModel &model () const { return m_model; }

  std::uint32_t attach (Position initial);
  void detach (std::uint32_t node);
  bool attached (std::uint32_t node) const;
  std::size_t size () const { return m_nodes.size (); }

  /// Adds a waypoint; the node moves linearly from the previous waypoint.
  void add_waypoint (std::uint32_t node, Millis at, Position where);
  Position position (std::uint32_t node, Millis at) const;

  void set_drop_filter (DropFilter filter) { m_drop = std::move (filter); }

  /// Receivers of one transmission, ascending by index.
  std::vector<Delivery> propagate (std::uint32_t sender, const Destination &dest,
                                   unsigned tx_power_mw, std::uint8_t packet_type, Millis now);

private:
  struct Waypoint
  {
    Millis at;
    Position where;
  };
  struct Node
  {
    std::vector<Waypoint> path;
    bool attached = true;
  };

  bool lost ();

  MediumModel m_model;
  std::vector<Node> m_nodes;
  std::mt19937_64 m_rng;
  DropFilter m_drop;
};

} // namespace prawn

#endif // PRAWN_MEDIUM_HPP
