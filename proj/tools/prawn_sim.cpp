// prawn-sim: runs a scenario file and prints the event trace.

#include "prawn/sim.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

int
main (int argc, char **argv)
{
  CLI::App app ("Deterministic multi-node Prawn simulation");
  std::string scenario_path;
  std::string csv_path;
  std::string csv_node;
  app.add_option ("scenario", scenario_path, "scenario file")->required ();
  app.add_option ("--csv", csv_path, "write an RSSI time series to this file");
  app.add_option ("--csv-node", csv_node, "node whose receptions go into the CSV");
  CLI11_PARSE (app, argc, argv);

  std::ifstream in (scenario_path);
  if (!in)
    {
      std::cerr << "prawn-sim: cannot read " << scenario_path << "\n";
      return 1;
    }
  std::ostringstream text;
  text << in.rdbuf ();

  try
    {
      prawn::Scenario sc = prawn::parse_scenario (text.str ());
      auto trace = prawn::run_scenario (sc);
      for (const auto &e : trace)
        std::cout << e.line () << "\n";
      if (!csv_path.empty ())
        {
          if (csv_node.empty () && !sc.nodes.empty ())
            csv_node = sc.nodes.front ().name;
          std::ofstream out (csv_path);
          out << prawn::rssi_series_csv (trace, csv_node);
        }
    }
  catch (const std::exception &e)
    {
      std::cerr << "prawn-sim: " << e.what () << "\n";
      return 1;
    }
  return 0;
}
