#pragma once

#include "afca/models/model.hpp"
#include "afca/models/model_spec.hpp"
#include "afca/models/serialize.hpp"
