#pragma once

// Umbrella header: the full solver, policy, simulation and artifact stack.

#include "orex/config.hpp"
#include "orex/errors.hpp"
#include "orex/grid.hpp"
#include "orex/model.hpp"
#include "orex/montecarlo.hpp"
#include "orex/output.hpp"
#include "orex/parallel.hpp"
#include "orex/policy.hpp"
#include "orex/quadrature.hpp"
#include "orex/solver.hpp"
