#pragma once

#include "attkgcn/config.hpp"
#include "attkgcn/error.hpp"
#include "attkgcn/interactions.hpp"
#include "attkgcn/kg_store.hpp"
#include "attkgcn/metrics.hpp"
#include "attkgcn/model.hpp"
#include "attkgcn/numerics.hpp"
#include "attkgcn/sweep.hpp"
#include "attkgcn/synthgen.hpp"
#include "attkgcn/training.hpp"
