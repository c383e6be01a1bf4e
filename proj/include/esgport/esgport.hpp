#pragma once

#include "esgport/core.hpp"
#include "esgport/market_data.hpp"
#include "esgport/nelder_mead.hpp"
#include "esgport/timeseries.hpp"
#include "esgport/nig.hpp"
#include "esgport/scenario.hpp"
#include "esgport/shrinkage.hpp"
#include "esgport/black_litterman.hpp"
#include "esgport/risk.hpp"
#include "esgport/simplex.hpp"
#include "esgport/optimizer.hpp"
#include "esgport/metrics.hpp"
#include "esgport/parallel.hpp"
#include "esgport/backtest.hpp"
#include "esgport/synth.hpp"
