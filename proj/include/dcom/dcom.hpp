#pragma once

#include "dcom/baselines.hpp"
#include "dcom/coverage.hpp"
#include "dcom/embedding.hpp"
#include "dcom/engine.hpp"
#include "dcom/error.hpp"
#include "dcom/harness.hpp"
#include "dcom/io.hpp"
#include "dcom/learners.hpp"
#include "dcom/purity.hpp"
