#pragma once

#include "wassdep/coefficients.hpp"
#include "wassdep/coupling.hpp"
#include "wassdep/derivatives.hpp"
#include "wassdep/errors.hpp"
#include "wassdep/estimation.hpp"
#include "wassdep/io.hpp"
#include "wassdep/linalg.hpp"
#include "wassdep/normal.hpp"
#include "wassdep/rng.hpp"
#include "wassdep/simulation.hpp"
