#pragma once
// Umbrella header.

#include "ripr/extended.hpp"
#include "ripr/measures.hpp"
#include "ripr/families.hpp"
#include "ripr/divergence.hpp"
#include "ripr/projection.hpp"
#include "ripr/evalue.hpp"
#include "ripr/subprob.hpp"
#include "ripr/ratelab.hpp"
