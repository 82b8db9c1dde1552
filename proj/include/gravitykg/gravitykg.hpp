#pragma once

// Umbrella header for the gravity knowledge-graph library.

#include "gravitykg/clustering.hpp"
#include "gravitykg/core.hpp"
#include "gravitykg/csv.hpp"
#include "gravitykg/dtree.hpp"
#include "gravitykg/edge_gnn.hpp"
#include "gravitykg/errors.hpp"
#include "gravitykg/evaluation.hpp"
#include "gravitykg/gravity.hpp"
#include "gravitykg/ingestion.hpp"
#include "gravitykg/kg_builder.hpp"
#include "gravitykg/manifest.hpp"
#include "gravitykg/pipeline.hpp"
#include "gravitykg/projection.hpp"
#include "gravitykg/rng.hpp"
#include "gravitykg/transe.hpp"
#include "gravitykg/version.hpp"
