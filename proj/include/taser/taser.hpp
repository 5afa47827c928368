#pragma once

#include "taser/baselines.hpp"
#include "taser/constellation.hpp"
#include "taser/errors.hpp"
#include "taser/fixed_point.hpp"
#include "taser/hw_model.hpp"
#include "taser/model.hpp"
#include "taser/random.hpp"
#include "taser/sim.hpp"
#include "taser/solver.hpp"
