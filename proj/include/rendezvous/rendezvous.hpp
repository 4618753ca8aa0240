#pragma once

#include "error.hpp"
#include "matrix.hpp"
#include "matops.hpp"
#include "topology.hpp"
#include "consensus.hpp"
#include "trajectory.hpp"
#include "switching.hpp"
#include "network.hpp"
#include "sim.hpp"
#include "scenario_file.hpp"
#include "csv.hpp"
#include "report.hpp"
