#pragma once

#include "chanrev/core.hpp"
#include "chanrev/linalg.hpp"
#include "chanrev/random.hpp"
#include "chanrev/state.hpp"
#include "chanrev/channel.hpp"
#include "chanrev/algebra.hpp"
#include "chanrev/divergence.hpp"
#include "chanrev/hypothesis_testing.hpp"
#include "chanrev/fisher.hpp"
#include "chanrev/reversibility.hpp"
#include "chanrev/instances.hpp"
