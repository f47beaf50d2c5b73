#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "cflab/dirichlet.hpp"
#include "cflab/floyd.hpp"
#include "cflab/gromov.hpp"
#include "cflab/group.hpp"

namespace cflab {

inline constexpr const char* kToolName = "cflab";
inline constexpr const char* kToolVersion = "0.1.0";

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitResource = 3;
inline constexpr int kExitNoConvergence = 4;

// Synthetic scalar fields used as solver inputs and decomposition subjects.
struct FieldSpec {
  enum class Kind {
    Spike,      // indicator of the identity
    Subtree,    // indicator of the BFS branch entered through one generator
    Halfplane,  // indicator of {first/coordinate exponent >= 1} (abelian)
    Random,     // iid uniform [low, high), seeded
    Constant,
  };
  Kind kind = Kind::Spike;
  std::string generator;  // Subtree
  int coordinate = 0;     // Halfplane
  double low = 0.0, high = 1.0;
  double value = 0.0;     // Constant
};

ScalarField make_field(const Ball& ball, const FieldSpec& spec,
                       std::uint64_t seed);

struct ScaleSpec {
  std::optional<double> a;      // fixed visual parameter; else derived
  std::optional<double> delta_hat;  // fixed estimate; else scanned
  double safety = 0.9;
  int delta_radius = 4;         // clamped to the configured radius
  DeltaScan::Mode delta_mode = DeltaScan::Mode::Exhaustive;
  std::int64_t delta_samples = 200'000;
};

struct CapsSpec {
  std::int64_t ball_vertices = kDefaultBallCap;
  std::int64_t table_elements = kDefaultTableCap;
  std::int64_t all_pairs = kDefaultAllPairsCap;
  std::int64_t exhaustive_delta = kDefaultExhaustiveDeltaCap;
};

struct ExperimentConfig {
  GroupSpec group;
  int radius = 4;
  double p = 2.0;
  AdmissibleFunction floyd = AdmissibleFunction::geometric(0.5);
  ScaleSpec scale;
  SolverConfig solver;
  SamplingPolicy sampling;
  CapsSpec caps;
  FieldSpec field;
  std::string ray_generator;  // defaults to the first generator
  std::string out_dir = ".";
};

// Parses and validates a config document; throws ConfigError with a precise
// message on any unknown key, wrong type or out-of-range value.
ExperimentConfig parse_config(const nlohmann::json& doc);

// Canonical re-serialisation (all defaults materialised, keys sorted); this
// exact object is echoed into every run manifest.
nlohmann::json config_to_json(const ExperimentConfig& config);

// Two-sided comparison of the chain metric against e^{-a (x|y)} on vertex
// pairs of a ball, plus the matched edge-path Floyd metric F(n) = e^{-a n}
// for the informational d_F / theta_a ratio.
struct InequalityCheck {
  double a = 0.0;
  double delta_hat = 0.0;
  double lower_coefficient = 0.0;  // 3 - 2 e^{3 delta a}
  std::int64_t pairs = 0;
  std::int64_t lower_violations = 0;
  std::int64_t upper_violations = 0;
  double max_upper_rel_error = 0.0;  // max (theta - upper)/upper over pairs
  double min_df_over_theta = 0.0;
  double max_df_over_theta = 0.0;
};

InequalityCheck verify_inequality(const Ball& ball,
                                  const GromovProductTable& products,
                                  double a, double delta_hat,
                                  const SamplingPolicy& policy);

// Runs one subcommand end to end: builds the objects, writes the command's
// CSV files and manifest.json under config.out_dir, prints a one-line
// summary to out, and maps failures to the exit-code taxonomy (errors are
// reported as single-line JSON on err).
int run_command(const std::string& command, const ExperimentConfig& config,
                std::ostream& out, std::ostream& err);

bool is_known_command(const std::string& command);

}  // namespace cflab
