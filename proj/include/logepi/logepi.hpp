#pragma once

#include "logepi/errors.hpp"
#include "logepi/quadrature.hpp"
#include "logepi/sphere_basis.hpp"
#include "logepi/trace.hpp"
#include "logepi/functional.hpp"
#include "logepi/critical_set.hpp"
#include "logepi/trajectory.hpp"
#include "logepi/energy.hpp"
#include "logepi/competitors.hpp"
#include "logepi/corpus.hpp"
#include "logepi/flows.hpp"
#include "logepi/flow_gain.hpp"
#include "logepi/obstacle.hpp"
#include "logepi/decay.hpp"
#include "logepi/io.hpp"
#include "logepi/config.hpp"
#include "logepi/suite.hpp"
