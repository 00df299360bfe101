#pragma once

#include "reprolab/core.hpp"
#include "reprolab/rng.hpp"
#include "reprolab/costs.hpp"
#include "reprolab/oracles.hpp"
#include "reprolab/solvers.hpp"
#include "reprolab/scenarios.hpp"
#include "reprolab/lab.hpp"
#include "reprolab/experiment.hpp"
