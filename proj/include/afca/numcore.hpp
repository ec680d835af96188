#pragma once

#include "afca/errors.hpp"
#include "afca/numcore/adam.hpp"
#include "afca/numcore/gradcheck.hpp"
#include "afca/numcore/graph.hpp"
#include "afca/numcore/norm.hpp"
#include "afca/numcore/ops.hpp"
#include "afca/numcore/rng.hpp"
#include "afca/numcore/tensor.hpp"
