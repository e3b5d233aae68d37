#pragma once

#include "obdlab/numeric.hpp"
#include "obdlab/rng.hpp"
#include "obdlab/utility.hpp"
#include "obdlab/domain.hpp"
#include "obdlab/datagen.hpp"
#include "obdlab/samplers.hpp"
#include "obdlab/summary.hpp"
#include "obdlab/design_jtc.hpp"
#include "obdlab/design_atae.hpp"
#include "obdlab/design_assisted.hpp"
#include "obdlab/decisions.hpp"
#include "obdlab/protocol.hpp"
#include "obdlab/reference_tables.hpp"
#include "obdlab/sim_engine.hpp"
#include "obdlab/report.hpp"
