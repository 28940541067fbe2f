#ifndef BETHE_ADMM_BETHE_ADMM_HPP
#define BETHE_ADMM_BETHE_ADMM_HPP

#include "datagen.hpp"
#include "decomposition.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "mrf.hpp"
#include "oracles.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "solver.hpp"
#include "tree_inference.hpp"

#endif
