#pragma once

#include "prde/errors.hpp"
#include "prde/grid.hpp"
#include "prde/control.hpp"
#include "prde/norms.hpp"
#include "prde/roughpath.hpp"
#include "prde/coefficients.hpp"
#include "prde/integrate.hpp"
#include "prde/skorohod.hpp"
#include "prde/solver.hpp"
#include "prde/io.hpp"
