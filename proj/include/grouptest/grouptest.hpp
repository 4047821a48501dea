#pragma once

#include "grouptest/decode.hpp"
#include "grouptest/errors.hpp"
#include "grouptest/exact_dist.hpp"
#include "grouptest/incgamma.hpp"
#include "grouptest/instance.hpp"
#include "grouptest/manifest.hpp"
#include "grouptest/mathutil.hpp"
#include "grouptest/matrix.hpp"
#include "grouptest/negbin.hpp"
#include "grouptest/rng.hpp"
#include "grouptest/simulate.hpp"
#include "grouptest/stein.hpp"
#include "grouptest/two_stage.hpp"
#include "grouptest/version.hpp"
