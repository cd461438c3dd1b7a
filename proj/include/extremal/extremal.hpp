#pragma once

#include "extremal/blocks.hpp"
#include "extremal/error.hpp"
#include "extremal/estimators.hpp"
#include "extremal/experiment.hpp"
#include "extremal/functional.hpp"
#include "extremal/linalg.hpp"
#include "extremal/models.hpp"
#include "extremal/rng.hpp"
#include "extremal/series.hpp"
#include "extremal/stats.hpp"
#include "extremal/variance.hpp"
