#pragma once

#include "spcl/core.hpp"
#include "spcl/errors.hpp"
#include "spcl/learners.hpp"
#include "spcl/random.hpp"
#include "spcl/trainer.hpp"
#include "spcl/weight_oracle.hpp"
#include "spcl/tasks/dataset.hpp"
#include "spcl/tasks/io.hpp"
#include "spcl/tasks/navigation.hpp"
#include "spcl/tasks/room_grid.hpp"
#include "spcl/tasks/synthetic.hpp"
#include "spcl/harness/config.hpp"
#include "spcl/harness/experiment.hpp"
#include "spcl/harness/trace_file.hpp"
