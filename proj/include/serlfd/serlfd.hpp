#pragma once

#include "serlfd/agent.hpp"
#include "serlfd/approximator.hpp"
#include "serlfd/buffers.hpp"
#include "serlfd/demos.hpp"
#include "serlfd/envs/grid_push.hpp"
#include "serlfd/envs/make.hpp"
#include "serlfd/envs/pacman.hpp"
#include "serlfd/error.hpp"
#include "serlfd/explainer.hpp"
#include "serlfd/harness/aggregate.hpp"
#include "serlfd/harness/config.hpp"
#include "serlfd/harness/demonstrator.hpp"
#include "serlfd/harness/experiment.hpp"
#include "serlfd/harness/metrics.hpp"
#include "serlfd/recorder.hpp"
#include "serlfd/tabular.hpp"
