#ifndef PRAWN_UNITS_HPP
#define PRAWN_UNITS_HPP

#include <cmath>
#include <stdexcept>

namespace prawn {

/// Received power in nanowatts: 10^(dBm/10 + 6).
inline double
dbm_to_nanowatts (double dbm)
{
  return std::pow (10.0, dbm / 10.0 + 6.0);
}

inline double
dbm_to_mw (double dbm)
{
  return std::pow (10.0, dbm / 10.0);
}

/// Throws std::domain_error for non-positive power.
inline double
mw_to_dbm (double p_mw)
{
  if (!(p_mw > 0.0))
    throw std::domain_error ("power must be positive to convert to dBm");
  return 10.0 * std::log10 (p_mw);
}

} // namespace prawn

#endif // PRAWN_UNITS_HPP
