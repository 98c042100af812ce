#pragma once

#include "star/baselines.hpp"
#include "star/cache.hpp"
#include "star/config.hpp"
#include "star/crypto.hpp"
#include "star/geometry.hpp"
#include "star/lines.hpp"
#include "star/nvm.hpp"
#include "star/recovery.hpp"
#include "star/report.hpp"
#include "star/simulator.hpp"
#include "star/sit.hpp"
#include "star/stats.hpp"
#include "star/trace.hpp"
#include "star/tracker.hpp"
#include "star/workloads.hpp"
