// polaroptics.hpp - Umbrella header

#pragma once

#include "polaroptics/bath.hpp"
#include "polaroptics/csv.hpp"
#include "polaroptics/errors.hpp"
#include "polaroptics/fit.hpp"
#include "polaroptics/holstein.hpp"
#include "polaroptics/htc.hpp"
#include "polaroptics/materials.hpp"
#include "polaroptics/nmqsd.hpp"
#include "polaroptics/parallel.hpp"
#include "polaroptics/quadrature.hpp"
#include "polaroptics/response.hpp"
#include "polaroptics/tmm.hpp"
#include "polaroptics/uncertainty.hpp"
#include "polaroptics/units.hpp"
