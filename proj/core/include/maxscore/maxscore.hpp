#pragma once

#include "maxscore/common.hpp"
#include "maxscore/inference.hpp"
#include "maxscore/instruments.hpp"
#include "maxscore/lrt.hpp"
#include "maxscore/montecarlo.hpp"
#include "maxscore/parallel.hpp"
#include "maxscore/rng.hpp"
#include "maxscore/sample.hpp"
#include "maxscore/teststat.hpp"
#include "maxscore/version.hpp"
