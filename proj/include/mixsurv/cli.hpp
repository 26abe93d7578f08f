#pragma once

namespace mixsurv {

enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 1,
  exit_runtime = 2,
  exit_flagged = 3,  // some summary row is invalid
};

// Entry point of the `mixsurv` executable.
int run_cli(int argc, char** argv);

}  // namespace mixsurv
