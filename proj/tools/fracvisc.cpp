#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "fracvisc/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Rates for fractional vanishing viscosity on the torus"};
  app.footer("Exit status: 0 ok, 1 failed checks, 2 config error. FRACVISC_THREADS sets the sweep worker count.");
  app.require_subcommand(1);
  const std::map<std::string, std::string> help{
      {"solve", "one viscous solve, snapshot CSVs and solve.json"},
      {"sweep", "epsilon sweep, rate fits, rates.csv / report.json / plots.gp"},
      {"dual-check", "drift, backward Fokker-Planck solve, Gronwall and duality checks"},
      {"one-sided", "one-sided error check at s = 1/2"},
      {"report", "refit and re-emit from an existing rates.csv"},
      {"selftest", "closed-form checks of every module"}};
  fracvisc::AppRequest request;
  std::string output;
  for (const auto& name : fracvisc::subcommands()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", request.config, "experiment config (key = value)")->required();
    sub->add_option("--output", output, "output directory (overrides output_dir)");
    sub->callback([&request, name] { request.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fracvisc::kExitConfigError;
  }
  if (!output.empty()) request.output = output;
  return fracvisc::run_command(request, std::cout, std::cerr);
}
