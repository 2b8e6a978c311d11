#pragma once

#include "lcoal/chain.hpp"
#include "lcoal/coupling.hpp"
#include "lcoal/invariant.hpp"
#include "lcoal/lambda_measure.hpp"
#include "lcoal/numeric.hpp"
#include "lcoal/random.hpp"
#include "lcoal/rates.hpp"
#include "lcoal/reference.hpp"
#include "lcoal/reversal.hpp"
#include "lcoal/stats.hpp"
