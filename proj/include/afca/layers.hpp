#pragma once

#include "afca/layers/af_attention.hpp"
#include "afca/layers/af_lstm.hpp"
#include "afca/layers/aft.hpp"
#include "afca/layers/linear.hpp"
#include "afca/layers/lstm.hpp"
#include "afca/layers/params.hpp"
