#pragma once

#include "renewnet/builtin.hpp"
#include "renewnet/characteristics.hpp"
#include "renewnet/csv.hpp"
#include "renewnet/error.hpp"
#include "renewnet/expr.hpp"
#include "renewnet/functionals.hpp"
#include "renewnet/fv.hpp"
#include "renewnet/model.hpp"
#include "renewnet/optimize.hpp"
#include "renewnet/picard.hpp"
#include "renewnet/verify.hpp"
