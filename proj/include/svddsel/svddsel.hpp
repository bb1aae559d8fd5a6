#pragma once

// Umbrella header.
#include "svddsel/bench.hpp"
#include "svddsel/dataset.hpp"
#include "svddsel/error.hpp"
#include "svddsel/kernel.hpp"
#include "svddsel/parallel.hpp"
#include "svddsel/risk.hpp"
#include "svddsel/rng.hpp"
#include "svddsel/sampling.hpp"
#include "svddsel/select.hpp"
#include "svddsel/svdd.hpp"
