#pragma once

#include "dkfd/dk_dynamics.hpp"
#include "dkfd/experiment.hpp"
#include "dkfd/fourier.hpp"
#include "dkfd/grid.hpp"
#include "dkfd/heat_flow.hpp"
#include "dkfd/moments.hpp"
#include "dkfd/operators.hpp"
#include "dkfd/particles.hpp"
#include "dkfd/plot.hpp"
#include "dkfd/random.hpp"
#include "dkfd/stats.hpp"
#include "dkfd/test_function.hpp"
