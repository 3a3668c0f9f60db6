#ifndef LRSD_LRSD_HPP
#define LRSD_LRSD_HPP

// Low-rank + sparse decomposition toolkit: batch and streaming solvers for
// pixel-by-frame matrices, foreground mask extraction, and the classification
// metric suite, behind one umbrella header.

#include "lrsd/batch.hpp"
#include "lrsd/errors.hpp"
#include "lrsd/image.hpp"
#include "lrsd/io.hpp"
#include "lrsd/linalg.hpp"
#include "lrsd/metrics.hpp"
#include "lrsd/model.hpp"
#include "lrsd/online.hpp"

#endif  // LRSD_LRSD_HPP
