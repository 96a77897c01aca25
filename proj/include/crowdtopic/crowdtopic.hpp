#pragma once

#include "crowdtopic/corpus.hpp"
#include "crowdtopic/error.hpp"
#include "crowdtopic/eval.hpp"
#include "crowdtopic/features.hpp"
#include "crowdtopic/forest.hpp"
#include "crowdtopic/parallel.hpp"
#include "crowdtopic/pipeline.hpp"
#include "crowdtopic/random.hpp"
#include "crowdtopic/seed_terms.hpp"
#include "crowdtopic/synth.hpp"
#include "crowdtopic/textprep.hpp"
#include "crowdtopic/topicmodel.hpp"
