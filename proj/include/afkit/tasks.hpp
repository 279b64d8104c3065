#pragma once

#include "afkit/config.hpp"

namespace afkit {

// Loads the inputs, finalizes automatic parameters and executes the task,
// writing all artifacts under config.output. Throws afkit::Error subclasses;
// the CLI maps them to exit codes.
void run_task(RunConfig& config);

}  // namespace afkit
