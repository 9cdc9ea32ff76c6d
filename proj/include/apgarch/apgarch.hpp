#pragma once

#include "apgarch/errors.hpp"
#include "apgarch/linalg_stats.hpp"
#include "apgarch/model.hpp"
#include "apgarch/filter.hpp"
#include "apgarch/lyapunov.hpp"
#include "apgarch/optimizer.hpp"
#include "apgarch/qmle.hpp"
#include "apgarch/portmanteau.hpp"
#include "apgarch/experiments.hpp"
#include "apgarch/io.hpp"
