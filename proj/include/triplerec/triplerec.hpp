#pragma once

#include "triplerec/error.hpp"
#include "triplerec/experiment.hpp"
#include "triplerec/gene_tree.hpp"
#include "triplerec/informative.hpp"
#include "triplerec/metrics.hpp"
#include "triplerec/newick.hpp"
#include "triplerec/random.hpp"
#include "triplerec/reconcile.hpp"
#include "triplerec/sim.hpp"
#include "triplerec/supertree.hpp"
#include "triplerec/tree.hpp"
#include "triplerec/triple.hpp"
#include "triplerec/union_find.hpp"
