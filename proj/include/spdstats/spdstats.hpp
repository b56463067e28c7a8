#pragma once

#include "spdstats/anisotropy.hpp"
#include "spdstats/dwi.hpp"
#include "spdstats/error.hpp"
#include "spdstats/field.hpp"
#include "spdstats/frechet.hpp"
#include "spdstats/io.hpp"
#include "spdstats/linalg.hpp"
#include "spdstats/metrics.hpp"
#include "spdstats/parallel.hpp"
#include "spdstats/pga.hpp"
#include "spdstats/phantom.hpp"
#include "spdstats/render.hpp"
#include "spdstats/tract.hpp"
