// prawn: the engine daemon.
//
// Exit status: 0 normal, 1 usage or configuration error, 2 startup failure
// (for example a port already in use).

#include "prawn/cli.hpp"
#include "prawn/engine.hpp"
#include "prawn/udp.hpp"

#include <unistd.h>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::atomic<bool> g_stop{false};

void
on_signal (int)
{
  g_stop = true;
}

std::string
host_name ()
{
  char buf[256] = {};
  if (gethostname (buf, sizeof buf - 1) != 0 || buf[0] == '\0')
    return "prawn";
  std::string name (buf);
  // Names travel as single words.
  for (char &c : name)
    if (c == ' ' || c == '\t')
      c = '-';
  return name;
}

std::optional<std::string>
read_file (const std::string &path)
{
  std::ifstream in (path);
  if (!in)
    return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf ();
  return ss.str ();
}

prawn::Ipv4Endpoint
parse_peer (const std::string &text, std::uint16_t default_port)
{
  auto colon = text.find (':');
  std::uint16_t port = default_port;
  if (colon != std::string::npos)
    port = static_cast<std::uint16_t> (std::stoul (text.substr (colon + 1)));
  return prawn::Ipv4Endpoint{prawn::parse_ipv4 (text.substr (0, colon)), port};
}

} // namespace

int
main (int argc, char **argv)
{
  std::vector<std::string> args (argv, argv + argc);
  auto parsed = prawn::parse_args (args);
  if (auto *err = std::get_if<prawn::UsageError> (&parsed))
    {
      std::cerr << "prawn: " << err->message << "\n" << prawn::usage_text ("prawn");
      return 1;
    }
  const auto &cli = std::get<prawn::CliOptions> (parsed);
  if (cli.help)
    {
      std::cout << prawn::usage_text ("prawn");
      return 0;
    }
  if (cli.version)
    {
      std::cout << "prawn " << prawn::kVersion << "\n";
      return 0;
    }

  prawn::ConfigFile file;
  const char *env = std::getenv ("PRAWN_CONFIG");
  std::string cfg_path = env ? env : "prawn.cfg";
  if (auto text = read_file (cfg_path))
    {
      try
        {
          file = prawn::parse_config (*text);
        }
      catch (const std::exception &e)
        {
          std::cerr << "prawn: " << cfg_path << ": " << e.what () << "\n";
          return 1;
        }
      for (const auto &w : file.warnings)
        std::cerr << "prawn: " << cfg_path << ": " << w << "\n";
    }
  else if (env)
    {
      std::cerr << "prawn: cannot read " << cfg_path << "\n";
      return 1;
    }

  prawn::EngineConfig config;
  prawn::UdpTransportOptions topts;
  try
    {
      config = prawn::make_engine_config (cli, file, host_name ());
      topts.port = config.neighbor_port;
      topts.interface_name = config.interface_name;
      if (file.bind_address)
        topts.bind_address = prawn::parse_ipv4 (*file.bind_address);
      for (const auto &p : file.peers)
        topts.broadcast_targets.push_back (parse_peer (p, config.neighbor_port));
    }
  catch (const std::exception &e)
    {
      std::cerr << "prawn: " << e.what () << "\n";
      return 1;
    }

  std::signal (SIGINT, on_signal);
  std::signal (SIGTERM, on_signal);

  try
    {
      prawn::SteadyClock clock;
      prawn::UdpTransport transport (topts);
      prawn::UdpEventSource source (transport, config.client_port, clock);
      prawn::Engine engine (config, transport, clock);

      const bool console = !config.daemon_mode;
      if (config.verbosity > 0 && console)
        engine.set_observer ([&] (const prawn::EngineEvent &ev) {
          if (ev.kind == prawn::EngineEvent::Kind::Request && config.verbosity < 2)
            return;
          std::cerr << "t=" << ev.at << " " << prawn::to_string (ev.kind);
          if (ev.power_mw)
            std::cerr << " power=" << ev.power_mw;
          if (ev.bytes)
            std::cerr << " bytes=" << ev.bytes;
          std::cerr << " " << ev.detail << "\n";
        });

      std::uint64_t shown_version = ~0ull;
      prawn::Millis shown_at = 0;
      auto refresh = [&] {
        if (!console)
          return;
        prawn::Millis now = clock.now ();
        if (engine.table_version () == shown_version || now - shown_at < 1000)
          return;
        shown_version = engine.table_version ();
        shown_at = now;
        std::cout << prawn::render_neighbor_list (engine.snapshot (), config.node_name)
                  << std::flush;
      };
      engine.run (source, g_stop, refresh);
    }
  catch (const prawn::BindError &e)
    {
      std::cerr << "prawn: " << e.what () << "\n";
      return 2;
    }
  catch (const std::exception &e)
    {
      std::cerr << "prawn: " << e.what () << "\n";
      return 2;
    }
  return 0;
}
