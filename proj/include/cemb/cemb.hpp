// cemb.hpp
// Umbrella header for the whole library.

#pragma once

#include "cemb/bench.hpp"
#include "cemb/checkpoint.hpp"
#include "cemb/cluster.hpp"
#include "cemb/compressed.hpp"
#include "cemb/csv.hpp"
#include "cemb/datagen.hpp"
#include "cemb/error.hpp"
#include "cemb/heuristic.hpp"
#include "cemb/jl.hpp"
#include "cemb/layers.hpp"
#include "cemb/matrix.hpp"
#include "cemb/metrics.hpp"
#include "cemb/model.hpp"
#include "cemb/optim.hpp"
#include "cemb/quantize.hpp"
#include "cemb/rng.hpp"
#include "cemb/serialize.hpp"
#include "cemb/train.hpp"
