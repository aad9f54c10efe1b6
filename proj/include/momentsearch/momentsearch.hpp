#pragma once

#include "momentsearch/config.hpp"
#include "momentsearch/corpus.hpp"
#include "momentsearch/embedder.hpp"
#include "momentsearch/engine.hpp"
#include "momentsearch/eval.hpp"
#include "momentsearch/fusion.hpp"
#include "momentsearch/generator.hpp"
#include "momentsearch/llm_planner.hpp"
#include "momentsearch/planner.hpp"
#include "momentsearch/remote_scorer.hpp"
#include "momentsearch/rerank.hpp"
#include "momentsearch/serialize.hpp"
#include "momentsearch/service.hpp"
#include "momentsearch/temporal.hpp"
#include "momentsearch/text.hpp"
#include "momentsearch/text_index.hpp"
#include "momentsearch/vector_index.hpp"
