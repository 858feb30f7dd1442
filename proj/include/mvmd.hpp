#ifndef MVMD_HPP
#define MVMD_HPP

#include "mvmd/errors.hpp"
#include "mvmd/normal.hpp"
#include "mvmd/random.hpp"
#include "mvmd/parallel.hpp"
#include "mvmd/vol_curve.hpp"
#include "mvmd/mixture_univariate.hpp"
#include "mvmd/linalg.hpp"
#include "mvmd/mixture_multivariate.hpp"
#include "mvmd/pricing.hpp"
#include "mvmd/montecarlo.hpp"
#include "mvmd/dependence.hpp"
#include "mvmd/config.hpp"
#include "mvmd/experiments.hpp"

#endif  // MVMD_HPP
