#pragma once

#include "nmodes/archive.hpp"
#include "nmodes/continuation.hpp"
#include "nmodes/dynamics.hpp"
#include "nmodes/integrate.hpp"
#include "nmodes/io.hpp"
#include "nmodes/metrics/coherence.hpp"
#include "nmodes/metrics/frechet.hpp"
#include "nmodes/metrics/modal_metrics.hpp"
#include "nmodes/modal.hpp"
#include "nmodes/model.hpp"
#include "nmodes/models/model_spec.hpp"
#include "nmodes/models/planar_arm.hpp"
#include "nmodes/ode.hpp"
#include "nmodes/parallel.hpp"
#include "nmodes/quadrature.hpp"
#include "nmodes/types.hpp"
