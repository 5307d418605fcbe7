#pragma once

#include "surb/datalink.hpp"
#include "surb/divergence.hpp"
#include "surb/engine.hpp"
#include "surb/errors.hpp"
#include "surb/netmodel.hpp"
#include "surb/protocols.hpp"
#include "surb/scenario.hpp"
#include "surb/sequences.hpp"
#include "surb/surb.hpp"
#include "surb/trace.hpp"
