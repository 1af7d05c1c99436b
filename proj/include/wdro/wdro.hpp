#pragma once

#include "wdro/error.hpp"
#include "wdro/numerics.hpp"
#include "wdro/lp.hpp"
#include "wdro/subgradient.hpp"
#include "wdro/convex.hpp"
#include "wdro/transport.hpp"
#include "wdro/wc_empirical.hpp"
#include "wdro/wc_moments.hpp"
#include "wdro/shrinkage.hpp"
#include "wdro/mmse.hpp"
#include "wdro/learn.hpp"
#include "wdro/calibrate.hpp"

namespace wdro {
inline constexpr const char* kVersion = "0.1.0";
}
