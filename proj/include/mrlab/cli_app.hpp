#pragma once

namespace mrlab {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitPass = 0, kExitCheckFailed = 1, kExitConfigError = 2, kExitMissingArtifact = 3 };

int run_cli(int argc, char** argv);

}  // namespace mrlab
