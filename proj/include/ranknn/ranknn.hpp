#pragma once
// Umbrella header for the rank-based nearest-neighbor toolkit.

#include "common.hpp"
#include "hidden_space.hpp"
#include "oracle.hpp"
#include "rank_matrix.hpp"
#include "disorder.hpp"
#include "distortion.hpp"
#include "hier_index.hpp"
#include "annulus.hpp"
#include "bintree.hpp"
#include "rsh.hpp"
