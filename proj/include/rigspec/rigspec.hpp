#pragma once

#include "rigspec/error.hpp"
#include "rigspec/expr.hpp"
#include "rigspec/config.hpp"
#include "rigspec/numeric.hpp"
#include "rigspec/scale.hpp"
#include "rigspec/operator.hpp"
#include "rigspec/resolvent.hpp"
#include "rigspec/quadrature.hpp"
#include "rigspec/spectral_set.hpp"
#include "rigspec/extension_family.hpp"
#include "rigspec/models.hpp"
#include "rigspec/geneig.hpp"
