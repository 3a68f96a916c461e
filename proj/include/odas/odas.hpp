#pragma once

// Umbrella header for the whole library.

#include "odas/core.hpp"
#include "odas/nn.hpp"
#include "odas/dataset.hpp"
#include "odas/corpus_io.hpp"
#include "odas/training.hpp"
#include "odas/gradcheck.hpp"
#include "odas/checkpoint.hpp"
#include "odas/detector.hpp"
#include "odas/eval.hpp"
#include "odas/cli.hpp"
#include "odas/experiment.hpp"
