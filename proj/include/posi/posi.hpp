#pragma once

#include "posi/bootstrap.hpp"
#include "posi/dataset.hpp"
#include "posi/errors.hpp"
#include "posi/experiments.hpp"
#include "posi/moments.hpp"
#include "posi/numeric.hpp"
#include "posi/ols.hpp"
#include "posi/parallel.hpp"
#include "posi/regions.hpp"
#include "posi/rng.hpp"
#include "posi/simulator.hpp"
