#pragma once

// Convenience umbrella. Individual headers are self-contained; include them
// directly where compile time matters.

#include "relstack/anchoring.hpp"
#include "relstack/calibration.hpp"
#include "relstack/common.hpp"
#include "relstack/metrics.hpp"
#include "relstack/pipeline.hpp"
#include "relstack/quantiles.hpp"
#include "relstack/rng.hpp"
#include "relstack/router.hpp"
#include "relstack/serialize.hpp"
#include "relstack/symptom.hpp"
#include "relstack/synthetic.hpp"
#include "relstack/table.hpp"
#include "relstack/windows.hpp"
