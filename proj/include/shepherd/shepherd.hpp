#pragma once

#include "shepherd/vec2.hpp"
#include "shepherd/swarm.hpp"
#include "shepherd/separation.hpp"
#include "shepherd/metrics.hpp"
#include "shepherd/planner.hpp"
#include "shepherd/controller.hpp"
#include "shepherd/experiment.hpp"
#include "shepherd/output.hpp"
