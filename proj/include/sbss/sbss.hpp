#pragma once

#include "sbss/dataset.hpp"
#include "sbss/error.hpp"
#include "sbss/eval.hpp"
#include "sbss/knn.hpp"
#include "sbss/rng.hpp"
#include "sbss/similarity.hpp"
#include "sbss/splitter.hpp"
#include "sbss/stats.hpp"
#include "sbss/version.hpp"
