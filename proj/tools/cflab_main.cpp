#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cflab/errors.hpp"
#include "cflab/experiment.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<int> radius;
  std::optional<double> p;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void attach_common(CLI::App* sub, CommonOptions& opts) {
  sub->add_option("--config", opts.config_path, "JSON config file")
      ->required();
  sub->add_option("--radius", opts.radius, "override config radius");
  sub->add_option("--p", opts.p, "override config exponent p");
  sub->add_option("--seed", opts.seed, "override sampling seed");
  sub->add_option("--out", opts.out, "override output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical experiments on Cayley graphs: growth, Floyd "
               "metrics, Gromov products, p-Dirichlet energies"};
  app.require_subcommand(1);

  struct SubInfo {
    const char* name;
    const char* help;
  };
  static const SubInfo subs[] = {
      {"ball", "enumerate a word-metric ball"},
      {"growth", "sphere/ball growth histogram"},
      {"gromov-delta", "four-point hyperbolicity estimates per radius"},
      {"choose-a", "pick a visual parameter from the delta estimate"},
      {"floyd-diameter", "Floyd-metric extent of spheres"},
      {"verify-inequality", "two-sided chain-metric comparison"},
      {"witness", "distance-to-ray witness energies vs. the summable bound"},
      {"summability", "shell series sum |S_n| F(n)^p from exact growth"},
      {"solve-dirichlet", "p-harmonic extension of boundary data"},
      {"decompose", "split a field into p-harmonic and boundary-zero parts"},
  };

  CommonOptions opts;
  for (const auto& s : subs) {
    attach_common(app.add_subcommand(s.name, s.help), opts);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : cflab::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();

  nlohmann::json doc;
  try {
    std::ifstream in(opts.config_path);
    if (!in) {
      throw cflab::ConfigError("cannot open config file " + opts.config_path);
    }
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    nlohmann::json err{{"error", "config"},
                       {"message", std::string("config is not valid JSON: ") +
                                       e.what()}};
    std::cerr << err.dump() << '\n';
    return cflab::kExitConfig;
  } catch (const cflab::ConfigError& e) {
    nlohmann::json err{{"error", "config"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return cflab::kExitConfig;
  }

  cflab::ExperimentConfig cfg;
  try {
    cfg = cflab::parse_config(doc);
  } catch (const cflab::ConfigError& e) {
    nlohmann::json err{{"error", "config"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return cflab::kExitConfig;
  }
  if (opts.radius) cfg.radius = *opts.radius;
  if (opts.p) cfg.p = *opts.p;
  if (opts.seed) cfg.sampling.seed = *opts.seed;
  if (opts.out) cfg.out_dir = *opts.out;
  if (cfg.radius < 0 || cfg.radius > 64) {
    nlohmann::json err{{"error", "config"},
                       {"message", "radius must lie in [0, 64]"}};
    std::cerr << err.dump() << '\n';
    return cflab::kExitConfig;
  }

  return cflab::run_command(command, cfg, std::cout, std::cerr);
}
