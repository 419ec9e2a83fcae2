#pragma once

// Umbrella header for the library.

#include "mlevqc/ansatz.hpp"
#include "mlevqc/ansatz_json.hpp"
#include "mlevqc/circuit_objective.hpp"
#include "mlevqc/discriminate.hpp"
#include "mlevqc/ensembles.hpp"
#include "mlevqc/errors.hpp"
#include "mlevqc/optimize.hpp"
#include "mlevqc/parallel.hpp"
#include "mlevqc/rng.hpp"
#include "mlevqc/scramble.hpp"
#include "mlevqc/state_io.hpp"
#include "mlevqc/statevec.hpp"
#include "mlevqc/training.hpp"
