#pragma once

// Umbrella header.
#include "wavex/cfm.hpp"
#include "wavex/dataset.hpp"
#include "wavex/error.hpp"
#include "wavex/field.hpp"
#include "wavex/fno.hpp"
#include "wavex/helmholtz.hpp"
#include "wavex/metrics.hpp"
#include "wavex/nn/checkpoint.hpp"
#include "wavex/nn/grad_check.hpp"
#include "wavex/phase_prior.hpp"
#include "wavex/pipeline/config.hpp"
#include "wavex/pipeline/experiment.hpp"
#include "wavex/pipeline/heatmap.hpp"
#include "wavex/pipeline/report.hpp"
#include "wavex/pipeline/split.hpp"
#include "wavex/simwave.hpp"
