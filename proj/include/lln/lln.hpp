// Umbrella header.
#pragma once

#include "lln/group.hpp"
#include "lln/rng.hpp"
#include "lln/walk.hpp"
#include "lln/sites.hpp"
#include "lln/functionals.hpp"
#include "lln/local_stats.hpp"
#include "lln/stats.hpp"
#include "lln/theory.hpp"
#include "lln/config.hpp"
#include "lln/experiments.hpp"
#include "lln/report.hpp"
