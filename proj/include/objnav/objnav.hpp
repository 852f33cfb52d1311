#pragma once

#include "objnav/agent.hpp"
#include "objnav/closeness.hpp"
#include "objnav/config.hpp"
#include "objnav/errors.hpp"
#include "objnav/eval.hpp"
#include "objnav/navigation.hpp"
#include "objnav/pipeline.hpp"
#include "objnav/rng.hpp"
#include "objnav/scene.hpp"
#include "objnav/sensor.hpp"
#include "objnav/shaping.hpp"
