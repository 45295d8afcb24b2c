#pragma once

// Umbrella header: sensor selection for linear Gaussian inverse problems
// by greedy maximization of the expected information gain.

#include "oed/errors.hpp"
#include "oed/rng.hpp"
#include "oed/problem.hpp"
#include "oed/eig.hpp"
#include "oed/greedy.hpp"
#include "oed/io.hpp"
#include "oed/run.hpp"
