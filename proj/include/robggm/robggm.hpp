#pragma once

// Robust estimation and testing of Gaussian graphical models:
// t-type M-estimation of scatter, covariance fitting under conditional
// independence constraints, asymptotic calibration constants and a scaled
// deviance goodness-of-fit test.

#include "constants.hpp"
#include "csv.hpp"
#include "errors.hpp"
#include "graph.hpp"
#include "graph_fit.hpp"
#include "inference.hpp"
#include "matrix.hpp"
#include "scatter.hpp"
#include "search.hpp"
