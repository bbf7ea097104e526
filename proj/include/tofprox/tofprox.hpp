#pragma once

#include "tofprox/background_model.hpp"
#include "tofprox/calibration.hpp"
#include "tofprox/delaunay.hpp"
#include "tofprox/detector.hpp"
#include "tofprox/eval.hpp"
#include "tofprox/histogram.hpp"
#include "tofprox/io.hpp"
#include "tofprox/reference.hpp"
#include "tofprox/simulator.hpp"
