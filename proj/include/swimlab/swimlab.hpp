#pragma once

#include "swimlab/errors.hpp"
#include "swimlab/grid.hpp"
#include "swimlab/geometry.hpp"
#include "swimlab/forces.hpp"
#include "swimlab/poisson.hpp"
#include "swimlab/fluid.hpp"
#include "swimlab/simulator.hpp"
#include "swimlab/volterra.hpp"
#include "swimlab/sensitivity.hpp"
#include "swimlab/winding.hpp"
#include "swimlab/controllability.hpp"
#include "swimlab/projection_lab.hpp"
#include "swimlab/config.hpp"
#include "swimlab/io.hpp"
