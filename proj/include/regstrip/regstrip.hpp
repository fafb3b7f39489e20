#pragma once

#include "regstrip/core.hpp"
#include "regstrip/rng.hpp"
#include "regstrip/geom_core.hpp"
#include "regstrip/duality.hpp"
#include "regstrip/strip_family.hpp"
#include "regstrip/conditions.hpp"
#include "regstrip/family.hpp"
#include "regstrip/measure.hpp"
#include "regstrip/heisenberg.hpp"
#include "regstrip/lemmas.hpp"
#include "regstrip/experiments.hpp"
