#pragma once

#include "polygame/cost.hpp"
#include "polygame/dot.hpp"
#include "polygame/error.hpp"
#include "polygame/exchange.hpp"
#include "polygame/flow.hpp"
#include "polygame/game.hpp"
#include "polygame/graph.hpp"
#include "polygame/ground_set.hpp"
#include "polygame/instances.hpp"
#include "polygame/matroid.hpp"
#include "polygame/parallel.hpp"
#include "polygame/polymatroid.hpp"
#include "polygame/solver.hpp"
