#include "prawn/cli.hpp"

#include "prawn/units.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <sstream>

namespace prawn {

std::string
usage_text (std::string_view program)
{
  std::string p (program);
  return "Usage: " + p + " [options]\n"
         "  -N <name>    node name (default: hostname)\n"
         "  -b <ms>      beacon period in ms (default: 10000)\n"
         "  -h           print this help and exit\n"
         "  -d           daemon mode, no console output\n"
         "  -v, -vv      verbose, very verbose\n"
         "  -p <port>    neighbor port (default: 3010)\n"
         "  -c <port>    client port (default: 3020)\n"
         "  -i <iface>   wireless interface (default: ath0)\n"
         "  -P <mW>      fixed transmit power in mW\n"
         "  -n           no power control, beacon at the highest level only\n"
         "  -W <n>       PER window in beacons (default: 5)\n"
         "  -V           print version and exit\n";
}

std::variant<CliOptions, UsageError>
parse_args (const std::vector<std::string> &args)
{
  CliOptions o;
  CLI::App app ("prawn", args.empty () ? "prawn" : args[0]);
  app.set_help_flag ();
  app.allow_extras (false);

  std::string name;
  auto *name_opt = app.add_option ("-N", name);
  app.add_option ("-b", o.beacon_period_ms)->check (CLI::Range (1u, 65535u));
  app.add_flag ("-h", o.help);
  app.add_flag ("-d", o.daemon);
  app.add_flag ("-v", o.verbosity);
  app.add_option ("-p", o.neighbor_port);
  app.add_option ("-c", o.client_port);
  app.add_option ("-i", o.interface_name);
  unsigned power = 0;
  auto *power_opt = app.add_option ("-P", power)->check (CLI::Range (1u, 255u));
  app.add_flag ("-n", o.no_power_control);
  app.add_option ("-W", o.per_window)->check (CLI::Range (1u, 65535u));
  app.add_flag ("-V", o.version);

  std::vector<std::string> rest;
  for (std::size_t i = args.size (); i > 1; --i)
    rest.push_back (args[i - 1]);
  try
    {
      app.parse (rest);
    }
  catch (const CLI::ParseError &e)
    {
      return UsageError{e.what ()};
    }
  catch (const std::exception &e)
    {
      return UsageError{e.what ()};
    }

  if (*name_opt)
    {
      if (name.empty () || name.size () > 255 || !is_wire_token (name) || name == "?")
        return UsageError{"-N: node name must be a single word of 1 to 255 octets"};
      o.node_name = name;
    }
  if (*power_opt)
    o.tx_power_mw = power;
  return o;
}

namespace {

std::string
trim (std::string_view s)
{
  auto b = s.find_first_not_of (" \t\r");
  if (b == std::string_view::npos)
    return {};
  auto e = s.find_last_not_of (" \t\r");
  return std::string (s.substr (b, e - b + 1));
}

std::vector<std::string>
split_list (const std::string &value)
{
  std::vector<std::string> out;
  std::string item;
  for (char c : value + ",")
    {
      if (c == ',' || c == ' ' || c == '\t')
        {
          if (!item.empty ())
            out.push_back (item);
          item.clear ();
        }
      else
        item += c;
    }
  return out;
}

template <typename T>
T
number (const std::string &text, const std::string &key)
{
  T value{};
  auto [ptr, ec] = std::from_chars (text.data (), text.data () + text.size (), value);
  if (ec != std::errc () || ptr != text.data () + text.size ())
    throw std::invalid_argument ("bad value '" + text + "' for " + key);
  return value;
}

} // namespace

ConfigFile
parse_config (std::string_view text)
{
  ConfigFile cfg;
  std::istringstream is{std::string (text)};
  std::string raw;
  unsigned lineno = 0;
  MediumModel medium;
  bool medium_set = false;
  while (std::getline (is, raw))
    {
      ++lineno;
      std::string line = trim (std::string_view (raw).substr (0, raw.find ('#')));
      if (line.empty ())
        continue;
      auto eq = line.find ('=');
      if (eq == std::string::npos)
        {
          cfg.warnings.push_back ("line " + std::to_string (lineno) + ": ignored, no '='");
          continue;
        }
      std::string key = trim (std::string_view (line).substr (0, eq));
      std::string value = trim (std::string_view (line).substr (eq + 1));
      try
        {
          if (key == "power_levels")
            {
              std::vector<unsigned> levels;
              for (const auto &v : split_list (value))
                levels.push_back (number<unsigned> (v, key));
              cfg.power_levels_mw = levels;
            }
          else if (key == "dead_threshold")
            cfg.dead_threshold = number<unsigned> (value, key);
          else if (key == "grace_factor")
            cfg.grace_factor = number<double> (value, key);
          else if (key == "dead_retention_cycles")
            cfg.dead_retention_cycles = number<unsigned> (value, key);
          else if (key == "two_hop_stale_cycles")
            cfg.two_hop_stale_cycles = number<unsigned> (value, key);
          else if (key == "queue_bound")
            cfg.queue_bound = number<std::size_t> (value, key);
          else if (key == "known_names")
            cfg.known_names = split_list (value);
          else if (key == "peers")
            cfg.peers = split_list (value);
          else if (key == "bind_address")
            cfg.bind_address = value;
          else if (key == "pl0_db")
            medium.pl0_db = number<double> (value, key), medium_set = true;
          else if (key == "exponent")
            medium.exponent_n = number<double> (value, key), medium_set = true;
          else if (key == "sensitivity_dbm")
            medium.sensitivity_dbm = number<double> (value, key), medium_set = true;
          else if (key == "loss_prob")
            medium.per_link_loss_prob = number<double> (value, key), medium_set = true;
          else if (key == "seed")
            medium.rng_seed = number<std::uint64_t> (value, key), medium_set = true;
          else
            cfg.warnings.push_back ("line " + std::to_string (lineno) + ": unknown key '" + key
                                    + "'");
        }
      catch (const std::invalid_argument &e)
        {
          throw std::invalid_argument ("line " + std::to_string (lineno) + ": " + e.what ());
        }
    }
  if (medium_set)
    {
      medium.validate ();
      cfg.medium = medium;
    }
  return cfg;
}

EngineConfig
make_engine_config (const CliOptions &cli, const ConfigFile &file, const std::string &default_name)
{
  EngineConfig c;
  c.node_name = cli.node_name.value_or (default_name);
  c.beacon_period_ms = cli.beacon_period_ms;
  c.neighbor_port = cli.neighbor_port;
  c.client_port = cli.client_port;
  c.interface_name = cli.interface_name;
  c.fixed_tx_power_mw = cli.tx_power_mw;
  c.power_control_enabled = !cli.no_power_control;
  c.per_window = cli.per_window;
  c.verbosity = cli.verbosity;
  c.daemon_mode = cli.daemon;
  if (file.power_levels_mw)
    c.power_levels_mw = *file.power_levels_mw;
  if (file.dead_threshold)
    c.dead_threshold = *file.dead_threshold;
  if (file.grace_factor)
    c.grace_factor = *file.grace_factor;
  if (file.dead_retention_cycles)
    c.dead_retention_cycles = *file.dead_retention_cycles;
  if (file.two_hop_stale_cycles)
    c.two_hop_stale_cycles = *file.two_hop_stale_cycles;
  if (file.queue_bound)
    c.queue_bound = *file.queue_bound;
  c.known_names = file.known_names;
  c.validate ();
  return c;
}

std::string
format_nanowatts (int dbm)
{
  char buf[64];
  std::snprintf (buf, sizeof buf, "%.7f", dbm_to_nanowatts (dbm));
  return buf;
}

std::string
render_neighbor_list (const NeighborSnapshot &snapshot, std::string_view self_name)
{
  const std::string rule (65, '=');
  const std::string indent = "      ";
  std::ostringstream os;
  os << "================ Neighbor List for node " << self_name << " ================\n";
  if (snapshot.neighbors.empty ())
    os << rule << "\n(no neighbors)\n" << rule << "\n";

  for (const auto &n : snapshot.neighbors)
    {
      os << rule << "\n";
      os << n.id.short_hex () << "  " << to_string (n.state) << "  " << format_mac (n.mac)
         << "  Beacon period : " << n.beacon_period_ms << "  " << n.name.value_or ("unknown")
         << "\n";
      os << indent << "Weakest beacon received by this neighbor : ";
      if (n.reverse_min_power_mw)
        os << *n.reverse_min_power_mw << " mW\n";
      else
        os << "unknown\n";
      os << indent << std::string (59, '-') << "\n";
      for (const auto &r : n.rows)
        {
          os << r.power_mw << "mW  " << to_string (r.state) << "  @" << r.last_arrival / 1000
             << "  R " << r.consecutive_losses << "  S " << r.last_sequence << "  B "
             << r.beacons_received << " [";
          if (r.rssi_dbm)
            os << format_nanowatts (*r.rssi_dbm) << " nW (" << *r.rssi_dbm << " dBm)";
          else
            os << "n/a";
          os << "]  " << r.received << "/" << r.window << "\n";
        }
      os << "\n2hop-Neighbors:";
      if (n.two_hop.empty ())
        os << "  none\n";
      bool first = true;
      for (const auto &th : n.two_hop)
        {
          os << (first ? "  " : "                 ") << th.target_name;
          if (th.lost)
            os << " (lost)";
          else
            {
              os << " (";
              if (th.min_power_mw)
                os << *th.min_power_mw << " mW, ";
              else
                os << "? mW, ";
              if (th.rssi_dbm)
                os << *th.rssi_dbm << " dBm)";
              else
                os << "? dBm)";
            }
          os << "\n";
          first = false;
        }
      os << rule << "\n\n";
    }
  return os.str ();
}

} // namespace prawn
