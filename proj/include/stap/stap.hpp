#pragma once

#include "stap/config.hpp"
#include "stap/diagnostics.hpp"
#include "stap/draws.hpp"
#include "stap/draws_io.hpp"
#include "stap/emission.hpp"
#include "stap/error.hpp"
#include "stap/ffbs.hpp"
#include "stap/geometry.hpp"
#include "stap/linalg.hpp"
#include "stap/priors.hpp"
#include "stap/random.hpp"
#include "stap/report.hpp"
#include "stap/sampler.hpp"
#include "stap/simulator.hpp"
#include "stap/track_io.hpp"
