#pragma once

#include "coefficients.hpp"
#include "diagnostics.hpp"
#include "experiments.hpp"
#include "fv_solver.hpp"
#include "galerkin.hpp"
#include "grid.hpp"
#include "initial_condition.hpp"
#include "linear_solver.hpp"
#include "properties.hpp"
#include "velocity.hpp"
