#pragma once

// Umbrella header for the gbcal library (the CLI layer in cli.hpp is kept
// separate so library users do not pull in CLI11/json).

#include "gbcal/errors.hpp"
#include "gbcal/experiments.hpp"
#include "gbcal/fisher.hpp"
#include "gbcal/io.hpp"
#include "gbcal/kl.hpp"
#include "gbcal/models.hpp"
#include "gbcal/numerics.hpp"
#include "gbcal/posterior.hpp"
#include "gbcal/rng.hpp"
