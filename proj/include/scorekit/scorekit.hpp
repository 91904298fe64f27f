#pragma once

#include "scorekit/common.hpp"
#include "scorekit/core.hpp"
#include "scorekit/rng.hpp"
#include "scorekit/prox.hpp"
#include "scorekit/sm1d.hpp"
#include "scorekit/dsm1d.hpp"
#include "scorekit/smnd.hpp"
#include "scorekit/dsmnd.hpp"
#include "scorekit/samplers.hpp"
#include "scorekit/baseline.hpp"
#include "scorekit/spiral.hpp"
#include "scorekit/serialize.hpp"
