#pragma once

#include "abflow/errors.hpp"
#include "abflow/core.hpp"
#include "abflow/pencil.hpp"
#include "abflow/accel.hpp"
#include "abflow/trace.hpp"
#include "abflow/msqrt.hpp"
#include "abflow/lab.hpp"
#include "abflow/io.hpp"
