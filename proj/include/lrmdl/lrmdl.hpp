#pragma once

// Umbrella header: lossless low-rank model selection by description length.

#include "lrmdl/types.hpp"
#include "lrmdl/special_functions.hpp"
#include "lrmdl/linalg.hpp"
#include "lrmdl/rpca.hpp"
#include "lrmdl/coders.hpp"
#include "lrmdl/selection.hpp"
#include "lrmdl/io.hpp"
#include "lrmdl/report.hpp"
