#pragma once

#include "mowsafe/classifier.hpp"
#include "mowsafe/errors.hpp"
#include "mowsafe/flag_file.hpp"
#include "mowsafe/frame.hpp"
#include "mowsafe/geometry.hpp"
#include "mowsafe/pipeline.hpp"
#include "mowsafe/scenario_io.hpp"
#include "mowsafe/scheduler.hpp"
#include "mowsafe/thermal.hpp"
#include "mowsafe/vehicle.hpp"
#include "mowsafe/world.hpp"
