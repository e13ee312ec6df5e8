#pragma once

// Umbrella header.

#include "pimfit/aggregate.hpp"
#include "pimfit/config.hpp"
#include "pimfit/csv.hpp"
#include "pimfit/dataset.hpp"
#include "pimfit/design.hpp"
#include "pimfit/diagnostics.hpp"
#include "pimfit/distributions.hpp"
#include "pimfit/errors.hpp"
#include "pimfit/fit.hpp"
#include "pimfit/link.hpp"
#include "pimfit/mc.hpp"
#include "pimfit/ols.hpp"
#include "pimfit/pool.hpp"
#include "pimfit/pseudo.hpp"
#include "pimfit/report.hpp"
#include "pimfit/rng.hpp"
#include "pimfit/scalable.hpp"
#include "pimfit/simgen.hpp"
#include "pimfit/wald.hpp"
