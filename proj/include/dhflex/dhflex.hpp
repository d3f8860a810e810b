#pragma once

// Umbrella header for the library. The command-line layer lives separately
// in dhflex/cli.hpp because it pulls in CLI11.

#include "dhflex/core.hpp"
#include "dhflex/errors.hpp"
#include "dhflex/ingest.hpp"
#include "dhflex/lp.hpp"
#include "dhflex/metrics.hpp"
#include "dhflex/selection.hpp"
#include "dhflex/strategies.hpp"
#include "dhflex/synthgen.hpp"
