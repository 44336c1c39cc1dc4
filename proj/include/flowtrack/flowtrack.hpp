// Umbrella header.
#pragma once

#include "flowtrack/core.hpp"
#include "flowtrack/deconv.hpp"
#include "flowtrack/flo_io.hpp"
#include "flowtrack/flow.hpp"
#include "flowtrack/heatmap.hpp"
#include "flowtrack/io.hpp"
#include "flowtrack/metrics.hpp"
#include "flowtrack/similarity.hpp"
#include "flowtrack/synth.hpp"
#include "flowtrack/tracker.hpp"
