#pragma once
// Umbrella header. The live HTTP transport (adapters_live.hpp) is not pulled
// in here; include it explicitly where a real endpoint is wired up.

#include "genaiops/errors.hpp"
#include "genaiops/text.hpp"
#include "genaiops/sha256.hpp"
#include "genaiops/rng.hpp"
#include "genaiops/suite.hpp"
#include "genaiops/metrics.hpp"
#include "genaiops/safety.hpp"
#include "genaiops/fairness.hpp"
#include "genaiops/adapters.hpp"
#include "genaiops/optimizer.hpp"
#include "genaiops/pipeline.hpp"
