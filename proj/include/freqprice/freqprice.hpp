#pragma once

#include "model.hpp"
#include "rng.hpp"
#include "dispatch.hpp"
#include "scenario.hpp"
#include "trajectory.hpp"
#include "baseline.hpp"
#include "metrics.hpp"
#include "dynamics.hpp"
#include "controller.hpp"
#include "simulate.hpp"
#include "config.hpp"
#include "io.hpp"
#include "verification.hpp"
