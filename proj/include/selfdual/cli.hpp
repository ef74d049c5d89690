#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "selfdual/config.hpp"
#include "selfdual/evolution.hpp"
#include "selfdual/mesh.hpp"
#include "selfdual/operators.hpp"
#include "selfdual/stationary.hpp"

namespace selfdual {

enum ExitCode : int {
  kExitSuccess = 0,
  kExitPropertyViolated = 1,
  kExitConfigError = 2,
  kExitPrecondition = 3,
  kExitSolveFailure = 4,
};

struct CommandOptions {
  std::string config_path;
  std::string out_dir;  // empty: print only
  std::uint64_t seed = 42;
};

/// Runs one of check-skew, verify-asd, solve-stationary, solve-evolution and
/// maps failures onto the exit codes above. Messages go to out and err.
int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out, std::ostream& err);

/// Builders shared by the commands; they record defaults in the config.
Grid grid_from_config(Config& c);
VectorFieldSpec vectorfield_from_config(Config& c, int dim);
StationaryProblem stationary_from_config(Config& c);
EvolutionProblem evolution_from_config(Config& c);

/// The initial field on the grid. In the Diffusive variant, boundary values
/// at roundoff level (below 1e-12 of the field's max) are set to exactly zero.
Vec initial_field(const EvolutionModel& model, const Expression& e);

/// "%.17g".
std::string format_double(double v);

}  // namespace selfdual
