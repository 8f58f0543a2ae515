#pragma once

// Umbrella header for the whole library.

#include "etdgrid/battery.hpp"
#include "etdgrid/checkpoint.hpp"
#include "etdgrid/compare.hpp"
#include "etdgrid/dp_oracle.hpp"
#include "etdgrid/env.hpp"
#include "etdgrid/forecast.hpp"
#include "etdgrid/manifest.hpp"
#include "etdgrid/network.hpp"
#include "etdgrid/qlearn.hpp"
#include "etdgrid/replay.hpp"
#include "etdgrid/rng.hpp"
#include "etdgrid/series.hpp"
#include "etdgrid/svg.hpp"
#include "etdgrid/trainer.hpp"
