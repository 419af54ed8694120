#pragma once

// Structure learning on dynamic graphs: SEM simulation, stacked designs, the
// acyclicity-constrained penalized solver, baselines, scoring, and the
// experiment harness.

#include "graphnotears/baselines.hpp"
#include "graphnotears/core.hpp"
#include "graphnotears/design.hpp"
#include "graphnotears/expm.hpp"
#include "graphnotears/grid.hpp"
#include "graphnotears/io.hpp"
#include "graphnotears/lbfgsb.hpp"
#include "graphnotears/metrics.hpp"
#include "graphnotears/plot.hpp"
#include "graphnotears/rng.hpp"
#include "graphnotears/simulate.hpp"
#include "graphnotears/solver.hpp"
#include "graphnotears/types.hpp"
#include "graphnotears/version.hpp"
