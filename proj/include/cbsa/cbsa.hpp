#pragma once

#include "cbsa/attack.hpp"
#include "cbsa/biohashing.hpp"
#include "cbsa/bits.hpp"
#include "cbsa/bloomfilter.hpp"
#include "cbsa/data.hpp"
#include "cbsa/error.hpp"
#include "cbsa/experiment.hpp"
#include "cbsa/ga.hpp"
#include "cbsa/metrics.hpp"
#include "cbsa/rng.hpp"
#include "cbsa/scores.hpp"
#include "cbsa/templates.hpp"
#include "cbsa/transform.hpp"
