#pragma once

// Umbrella header: sampled-data discretization of continuous-time filters
// with lifting-based error analysis and H-infinity redesign.

#include "sdisc/analysis.hpp"
#include "sdisc/discretize.hpp"
#include "sdisc/errors.hpp"
#include "sdisc/generalized_plant.hpp"
#include "sdisc/hinf_norm.hpp"
#include "sdisc/json_io.hpp"
#include "sdisc/lifting.hpp"
#include "sdisc/matrix_exponential.hpp"
#include "sdisc/riccati.hpp"
#include "sdisc/state_space.hpp"
#include "sdisc/synthesis.hpp"
