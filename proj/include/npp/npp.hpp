#pragma once

// Zero-shot class unlearning toolkit: relevance propagation, classification
// path analysis, neuron masking, and the evaluation harness around them.

#include "npp/analysis.hpp"
#include "npp/dataset.hpp"
#include "npp/digits.hpp"
#include "npp/error.hpp"
#include "npp/eval.hpp"
#include "npp/heatmap.hpp"
#include "npp/layer.hpp"
#include "npp/lrp.hpp"
#include "npp/model.hpp"
#include "npp/perturb.hpp"
#include "npp/rng.hpp"
#include "npp/serialize.hpp"
#include "npp/tensor.hpp"
#include "npp/train.hpp"
