#pragma once
// Umbrella header.
#include "scmil/attention.hpp"
#include "scmil/bag.hpp"
#include "scmil/checkpoint.hpp"
#include "scmil/cluster.hpp"
#include "scmil/error.hpp"
#include "scmil/layers.hpp"
#include "scmil/matrix.hpp"
#include "scmil/mdn.hpp"
#include "scmil/metrics.hpp"
#include "scmil/model.hpp"
#include "scmil/optim.hpp"
#include "scmil/rng.hpp"
#include "scmil/soft_filter.hpp"
#include "scmil/special.hpp"
#include "scmil/svg.hpp"
#include "scmil/synthetic.hpp"
#include "scmil/tape.hpp"
#include "scmil/train.hpp"
