#pragma once

#include "swipt/errors.hpp"
#include "swipt/numeric.hpp"
#include "swipt/fading.hpp"
#include "swipt/link.hpp"
#include "swipt/dual.hpp"
#include "swipt/power_control.hpp"
#include "swipt/outage_energy.hpp"
#include "swipt/rate_energy.hpp"
#include "swipt/rx_energy.hpp"
#include "swipt/baselines.hpp"
#include "swipt/config.hpp"
#include "swipt/experiment.hpp"
