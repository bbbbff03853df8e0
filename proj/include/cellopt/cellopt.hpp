#pragma once

// Umbrella header.

#include "cellopt/common.hpp"
#include "cellopt/cell_model.hpp"
#include "cellopt/instance_io.hpp"
#include "cellopt/graph_alg.hpp"
#include "cellopt/lp_core.hpp"
#include "cellopt/milp_builder.hpp"
#include "cellopt/tuple_engine.hpp"
#include "cellopt/reduced_lp.hpp"
#include "cellopt/heuristic_engine.hpp"
#include "cellopt/bounds.hpp"
#include "cellopt/cli.hpp"
