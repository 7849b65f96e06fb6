#ifndef KGTS_KGTS_HPP
#define KGTS_KGTS_HPP

#include "kgts/checks.hpp"
#include "kgts/expint.hpp"
#include "kgts/fft.hpp"
#include "kgts/harness.hpp"
#include "kgts/isv.hpp"
#include "kgts/problem.hpp"
#include "kgts/solver.hpp"
#include "kgts/spectral.hpp"
#include "kgts/tau.hpp"
#include "kgts/twoscale.hpp"

#endif
