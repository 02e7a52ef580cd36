#pragma once

// Umbrella header for the whole toolkit.

#include "cmos/ablation.hpp"
#include "cmos/config.hpp"
#include "cmos/dataset.hpp"
#include "cmos/mat.hpp"
#include "cmos/metrics.hpp"
#include "cmos/model.hpp"
#include "cmos/optim.hpp"
#include "cmos/parallel.hpp"
#include "cmos/params.hpp"
#include "cmos/periodicity.hpp"
#include "cmos/report.hpp"
#include "cmos/rng.hpp"
#include "cmos/synth.hpp"
#include "cmos/train.hpp"
#include "cmos/windows.hpp"
