// simplexci.hpp: everything except the JSON layer (io.hpp).
#pragma once

#include "core.hpp"
#include "harness.hpp"
#include "interval_engine.hpp"
#include "methods.hpp"
#include "quantile_bands.hpp"
#include "scalar_bounds.hpp"
#include "simplex_regions.hpp"
