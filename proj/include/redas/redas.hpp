#pragma once

#include "redas/costmodel.hpp"
#include "redas/cyclesim.hpp"
#include "redas/error.hpp"
#include "redas/geometry.hpp"
#include "redas/report.hpp"
#include "redas/scheduler.hpp"
#include "redas/workload.hpp"
