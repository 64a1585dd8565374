#pragma once

// Umbrella header: every library module. The command-line layer lives in
// hjbvd/cli.hpp and is not included here.
#include "hjbvd/config.hpp"
#include "hjbvd/study.hpp"
