#pragma once

// Umbrella header for the digit-triad MNIST benchmark library.

#include "digitriad/architectures.hpp"
#include "digitriad/dataset.hpp"
#include "digitriad/errors.hpp"
#include "digitriad/evaluation.hpp"
#include "digitriad/idx.hpp"
#include "digitriad/layers.hpp"
#include "digitriad/loss.hpp"
#include "digitriad/network.hpp"
#include "digitriad/optimizer.hpp"
#include "digitriad/report_io.hpp"
#include "digitriad/rng.hpp"
#include "digitriad/svm.hpp"
#include "digitriad/tensor.hpp"
#include "digitriad/training.hpp"

namespace digitriad {

// Default scalar type; gradient-check suites instantiate double instead.
#ifdef DIGITRIAD_REAL_DOUBLE
using real_t = double;
#else
using real_t = float;
#endif

}  // namespace digitriad
