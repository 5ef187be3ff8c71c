#pragma once

#include "interseg/agents.hpp"
#include "interseg/autozoom.hpp"
#include "interseg/components.hpp"
#include "interseg/edt.hpp"
#include "interseg/error_regions.hpp"
#include "interseg/grid.hpp"
#include "interseg/instances.hpp"
#include "interseg/interactions.hpp"
#include "interseg/metrics.hpp"
#include "interseg/morphology.hpp"
#include "interseg/nifti.hpp"
#include "interseg/noise.hpp"
#include "interseg/prompts.hpp"
#include "interseg/resample.hpp"
#include "interseg/rng.hpp"
#include "interseg/sampling.hpp"
#include "interseg/segmenters.hpp"
#include "interseg/session.hpp"
#include "interseg/skeleton.hpp"
#include "interseg/volio.hpp"
#include "interseg/warp.hpp"

namespace interseg {
#ifndef INTERSEG_VERSION
#define INTERSEG_VERSION "0.1.0"  // kept in step with project() in CMakeLists.txt
#endif

inline constexpr const char* kVersion = INTERSEG_VERSION;
}
