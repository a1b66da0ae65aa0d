#pragma once

// Umbrella header for the whole laboratory.

#include "levylab/config.hpp"
#include "levylab/environment.hpp"
#include "levylab/experiments.hpp"
#include "levylab/feynman_kac.hpp"
#include "levylab/io.hpp"
#include "levylab/math.hpp"
#include "levylab/paths.hpp"
#include "levylab/quadrature.hpp"
#include "levylab/rates.hpp"
#include "levylab/rng.hpp"
#include "levylab/spectral.hpp"
#include "levylab/symbols.hpp"
#include "levylab/verify.hpp"
