#pragma once

#include "nhjb/benchmarks.hpp"
#include "nhjb/dynamics.hpp"
#include "nhjb/hamiltonian.hpp"
#include "nhjb/history.hpp"
#include "nhjb/io.hpp"
#include "nhjb/mollify.hpp"
#include "nhjb/problem.hpp"
#include "nhjb/quadrature.hpp"
#include "nhjb/sampling.hpp"
#include "nhjb/suite.hpp"
#include "nhjb/value.hpp"
#include "nhjb/verifier.hpp"
