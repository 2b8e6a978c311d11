#include <cstdint>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "lcoal/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Block-counting dynamics of Lambda-coalescents"};
  app.require_subcommand(1, 1);

  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 1;
  bool override_guard = false;

  const std::map<std::string, std::string> about = {
      {"check", "integrability and lattice conditions of the measure"},
      {"rates", "merger and jump rates up to b_max blocks"},
      {"simulate", "forward block-counting paths"},
      {"last-merger", "exact and Monte Carlo law of the last merger size"},
      {"invariant", "quasi-invariant measure from exact profiles"},
      {"reverse", "time-reversed chain and its paths"},
      {"couple", "coupling of the block count with a subordinator"},
      {"reference", "closed-form limit laws"},
      {"lattice-scan", "last-merger probabilities along log-spaced n"},
  };
  for (const auto& name : lcoal::cli::subcommands()) {
    auto* sub = app.add_subcommand(name, about.at(name));
    // a missing file is reported by the runner with the config exit code
    sub->add_option("--config", config, "JSON config file")->required();
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--out", out, "output directory (overrides output_dir)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--override-size-guard", override_guard, "allow the exact DP above n = 20000");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? lcoal::cli::kOk : lcoal::cli::kUsage;
  }

  auto* sub = app.get_subcommands().front();
  lcoal::cli::RunOptions opts;
  if (sub->count("--seed")) opts.seed = seed;
  if (sub->count("--out")) opts.out_dir = out;
  opts.threads = threads;
  opts.override_size_guard = override_guard;
  return lcoal::cli::run(sub->get_name(), config, opts, std::cerr);
}
