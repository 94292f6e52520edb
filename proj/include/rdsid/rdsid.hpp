#pragma once

// Convenience umbrella header.

#include "rdsid/error.hpp"
#include "rdsid/estimators.hpp"
#include "rdsid/experiments.hpp"
#include "rdsid/io.hpp"
#include "rdsid/network.hpp"
#include "rdsid/population.hpp"
#include "rdsid/rng.hpp"
#include "rdsid/sampling.hpp"
#include "rdsid/scenario.hpp"
#include "rdsid/stats.hpp"
#include "rdsid/types.hpp"
