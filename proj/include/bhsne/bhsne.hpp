// Umbrella header.
#pragma once

#include "affinity.hpp"
#include "config.hpp"
#include "error.hpp"
#include "gradient.hpp"
#include "io.hpp"
#include "matrix.hpp"
#include "metrics.hpp"
#include "optimizer.hpp"
#include "pca.hpp"
#include "spacetree.hpp"
#include "vptree.hpp"
