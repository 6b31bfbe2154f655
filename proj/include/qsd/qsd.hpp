// Umbrella header for the qsd library.
#pragma once

#include "qsd/config.hpp"
#include "qsd/core.hpp"
#include "qsd/csv.hpp"
#include "qsd/discrete.hpp"
#include "qsd/ensemble.hpp"
#include "qsd/noise.hpp"
#include "qsd/rng.hpp"
#include "qsd/symmetry.hpp"
#include "qsd/types.hpp"
#include "qsd/unravel.hpp"
#include "qsd/verify.hpp"
#include "qsd/version.hpp"
