#pragma once

// Umbrella header.

#include "rmbs/corpus.hpp"
#include "rmbs/csv.hpp"
#include "rmbs/error.hpp"
#include "rmbs/extraction.hpp"
#include "rmbs/features.hpp"
#include "rmbs/glm/cv.hpp"
#include "rmbs/glm/lasso.hpp"
#include "rmbs/glm/metrics.hpp"
#include "rmbs/performance.hpp"
#include "rmbs/pipeline/config.hpp"
#include "rmbs/pipeline/run.hpp"
#include "rmbs/synth.hpp"
#include "rmbs/topics/analysis.hpp"
#include "rmbs/topics/dtm.hpp"
#include "rmbs/topics/io.hpp"
#include "rmbs/topics/lda.hpp"
#include "rmbs/topics/model.hpp"
#include "rmbs/toxicity.hpp"
