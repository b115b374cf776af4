#pragma once

#include "qnet/batch.hpp"
#include "qnet/config.hpp"
#include "qnet/dense.hpp"
#include "qnet/errors.hpp"
#include "qnet/interarrival.hpp"
#include "qnet/kernel.hpp"
#include "qnet/mathutil.hpp"
#include "qnet/measures.hpp"
#include "qnet/model.hpp"
#include "qnet/numerics.hpp"
#include "qnet/quadrature.hpp"
#include "qnet/real.hpp"
#include "qnet/rng.hpp"
#include "qnet/run.hpp"
#include "qnet/simulator.hpp"
#include "qnet/solver.hpp"
