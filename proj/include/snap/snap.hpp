#pragma once

// Umbrella header for the snap library.

#include "snap/core.hpp"
#include "snap/poly.hpp"
#include "snap/oracle.hpp"
#include "snap/stationarity.hpp"
#include "snap/negative_curvature.hpp"
#include "snap/line_search.hpp"
#include "snap/solver.hpp"
#include "snap/invariants.hpp"
#include "snap/bench.hpp"
