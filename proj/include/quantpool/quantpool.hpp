#pragma once

// Aggregation and evaluation of quantile-format probabilistic forecasts:
// mean/median/trimming aggregators for interval and distributional forecasts,
// proper scoring rules, calibration diagnostics, skill tables, hub-format
// corpus ingestion, and a synthetic crowd generator.

#include "quantpool/grid.hpp"
#include "quantpool/types.hpp"
#include "quantpool/stats.hpp"
#include "quantpool/scoring.hpp"
#include "quantpool/interval_agg.hpp"
#include "quantpool/curve_agg.hpp"
#include "quantpool/rng.hpp"
#include "quantpool/synthetic.hpp"
#include "quantpool/weeks.hpp"
#include "quantpool/csv.hpp"
#include "quantpool/ingest.hpp"
#include "quantpool/harness.hpp"
