#ifndef PRAWN_CLI_HPP
#define PRAWN_CLI_HPP

#include "prawn/engine.hpp"
#include "prawn/medium.hpp"
#include "prawn/neighbor_table.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace prawn {

struct CliOptions
{
  std::optional<std::string> node_name;
  unsigned beacon_period_ms = 10000;
  bool help = false;
  bool daemon = false;
  int verbosity = 0;
  std::uint16_t neighbor_port = 3010;
  std::uint16_t client_port = 3020;
  std::string interface_name = "ath0";
  std::optional<unsigned> tx_power_mw;
  bool no_power_control = false;
  unsigned per_window = 5;
  bool version = false;
};

struct UsageError
{
  std::string message;
};

/// Never throws; anything malformed becomes a UsageError.
std::variant<CliOptions, UsageError> parse_args (const std::vector<std::string> &args);

std::string usage_text (std::string_view program);

/// Settings from prawn.cfg. Absent keys leave the defaults alone.
struct ConfigFile
{
  std::optional<std::vector<unsigned>> power_levels_mw;
  std::optional<unsigned> dead_threshold;
  std::optional<double> grace_factor;
  std::optional<unsigned> dead_retention_cycles;
  std::optional<unsigned> two_hop_stale_cycles;
  std::optional<std::size_t> queue_bound;
  std::vector<std::string> known_names;
  /// "a.b.c.d" or "a.b.c.d:port" targets for broadcasts.
  std::vector<std::string> peers;
  std::optional<std::string> bind_address;
  std::optional<MediumModel> medium;
  /// Unknown keys, reported but not fatal.
  std::vector<std::string> warnings;
};

/// "key = value" lines, "#" comments. Throws std::invalid_argument on a bad
/// value for a known key.
ConfigFile parse_config (std::string_view text);

/// Command line over config file over built-in defaults.
EngineConfig make_engine_config (const CliOptions &cli, const ConfigFile &file,
                                 const std::string &default_name);

/// The console neighbor list.
std::string render_neighbor_list (const NeighborSnapshot &snapshot, std::string_view self_name);

/// "%.7f" rendering of a dBm value in nanowatts, e.g. -54 -> "3.9810717".
std::string format_nanowatts (int dbm);

} // namespace prawn

#endif // PRAWN_CLI_HPP
