#pragma once

#include "trust_motion/alignment.hpp"
#include "trust_motion/characteristics.hpp"
#include "trust_motion/clustering.hpp"
#include "trust_motion/common.hpp"
#include "trust_motion/csv.hpp"
#include "trust_motion/embeddings.hpp"
#include "trust_motion/factor_analysis.hpp"
#include "trust_motion/ingest.hpp"
#include "trust_motion/pipeline.hpp"
#include "trust_motion/rng.hpp"
#include "trust_motion/synth.hpp"
#include "trust_motion/trajectory.hpp"
