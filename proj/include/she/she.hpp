#pragma once

// Umbrella header for the 1-D stochastic heat equation toolkit.

#include "she/diagnostics.hpp"
#include "she/ensemble.hpp"
#include "she/errors.hpp"
#include "she/grid.hpp"
#include "she/heat_kernel.hpp"
#include "she/io.hpp"
#include "she/noise.hpp"
#include "she/nonlinearity.hpp"
#include "she/pde.hpp"
#include "she/quadrature.hpp"
#include "she/spde.hpp"
