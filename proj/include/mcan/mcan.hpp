#pragma once

#include "mcan/can_core.hpp"
#include "mcan/city_sim.hpp"
#include "mcan/config_io.hpp"
#include "mcan/error.hpp"
#include "mcan/ga_tuner.hpp"
#include "mcan/head_direction.hpp"
#include "mcan/metrics.hpp"
#include "mcan/multiscale.hpp"
#include "mcan/plot.hpp"
#include "mcan/trajectory.hpp"
#include "mcan/trajectory_io.hpp"
