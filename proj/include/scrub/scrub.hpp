#pragma once

#include "scrub/config.hpp"
#include "scrub/fc.hpp"
#include "scrub/filters.hpp"
#include "scrub/io.hpp"
#include "scrub/metrics.hpp"
#include "scrub/projection.hpp"
#include "scrub/regression.hpp"
#include "scrub/render.hpp"
#include "scrub/rng.hpp"
#include "scrub/standardize.hpp"
#include "scrub/stats.hpp"
#include "scrub/synth.hpp"
#include "scrub/tv.hpp"
#include "scrub/types.hpp"
