#pragma once

#include "tbaopt/annealer.hpp"
#include "tbaopt/benchmarks.hpp"
#include "tbaopt/errors.hpp"
#include "tbaopt/evaluator.hpp"
#include "tbaopt/external.hpp"
#include "tbaopt/harness.hpp"
#include "tbaopt/hash.hpp"
#include "tbaopt/jsonl_log.hpp"
#include "tbaopt/metrics.hpp"
#include "tbaopt/optimizers.hpp"
#include "tbaopt/protocol.hpp"
#include "tbaopt/report.hpp"
#include "tbaopt/rng.hpp"
#include "tbaopt/run_config.hpp"
#include "tbaopt/search_space.hpp"
#include "tbaopt/tpe.hpp"
#include "tbaopt/value.hpp"
