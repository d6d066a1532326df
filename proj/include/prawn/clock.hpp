#ifndef PRAWN_CLOCK_HPP
#define PRAWN_CLOCK_HPP

#include "prawn/types.hpp"

#include <chrono>
#include <stdexcept>

namespace prawn {

class Clock
{
public:
  virtual ~Clock () = default;
  virtual Millis now () const = 0;
};

/// Monotonic wall clock, zero at construction.
class SteadyClock : public Clock
{
public:
  SteadyClock () : m_origin (std::chrono::steady_clock::now ()) {}

  Millis now () const override
  {
    return std::chrono::duration_cast<std::chrono::milliseconds> (
               std::chrono::steady_clock::now () - m_origin)
        .count ();
  }

private:
  std::chrono::steady_clock::time_point m_origin;
};

/// Simulated clock; only moves when told to.
class ManualClock : public Clock
{
public:
  explicit ManualClock (Millis start = 0) : m_now (start) {}

  Millis now () const override { return m_now; }

  void set (Millis t)
  {
    if (t < m_now)
      throw std::logic_error ("simulated clock cannot move backwards");
    m_now = t;
  }

  void advance (Millis dt) { set (m_now + dt); }

private:
  Millis m_now;
};

} // namespace prawn

#endif // PRAWN_CLOCK_HPP
