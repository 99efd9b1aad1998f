#pragma once

// Umbrella header for the whole repair toolkit.

#include "imr/baselines.hpp"
#include "imr/csv.hpp"
#include "imr/engine.hpp"
#include "imr/errors.hpp"
#include "imr/estimation.hpp"
#include "imr/evalkit.hpp"
#include "imr/online.hpp"
#include "imr/series.hpp"
