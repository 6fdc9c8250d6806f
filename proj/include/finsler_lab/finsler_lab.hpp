#pragma once

#include "finsler_lab/errors.hpp"
#include "finsler_lab/jet.hpp"
#include "finsler_lab/expr.hpp"
#include "finsler_lab/tensor.hpp"
#include "finsler_lab/metric.hpp"
#include "finsler_lab/ambient.hpp"
#include "finsler_lab/connections.hpp"
#include "finsler_lab/submanifold.hpp"
#include "finsler_lab/verify.hpp"
