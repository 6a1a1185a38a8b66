#pragma once

#include "ebecg/baselines.hpp"
#include "ebecg/clustering.hpp"
#include "ebecg/delineation.hpp"
#include "ebecg/interp.hpp"
#include "ebecg/io.hpp"
#include "ebecg/lc_sampler.hpp"
#include "ebecg/metrics.hpp"
#include "ebecg/pipeline.hpp"
#include "ebecg/reconstruction.hpp"
#include "ebecg/segmentation.hpp"
#include "ebecg/stats.hpp"
#include "ebecg/template.hpp"
#include "ebecg/template_manager.hpp"
#include "ebecg/types.hpp"
#include "ebecg/warping.hpp"
