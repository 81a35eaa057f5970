#pragma once

#include "gibbsel/adaptive.hpp"
#include "gibbsel/error.hpp"
#include "gibbsel/experiment.hpp"
#include "gibbsel/field_io.hpp"
#include "gibbsel/knn.hpp"
#include "gibbsel/lattice.hpp"
#include "gibbsel/local_error.hpp"
#include "gibbsel/model.hpp"
#include "gibbsel/noise.hpp"
#include "gibbsel/oracle.hpp"
#include "gibbsel/parallel.hpp"
#include "gibbsel/potts.hpp"
#include "gibbsel/reftable.hpp"
#include "gibbsel/rng.hpp"
#include "gibbsel/summaries.hpp"
