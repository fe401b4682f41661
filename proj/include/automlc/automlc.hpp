#pragma once

#include "automlc/dataset.hpp"
#include "automlc/experiment.hpp"
#include "automlc/grammar.hpp"
#include "automlc/metrics.hpp"
#include "automlc/mlc.hpp"
#include "automlc/operators.hpp"
#include "automlc/pipeline.hpp"
#include "automlc/search/search.hpp"
#include "automlc/slc.hpp"
#include "automlc/stats.hpp"
