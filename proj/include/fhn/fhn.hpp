#ifndef FHN_FHN_HPP
#define FHN_FHN_HPP

#include "fhn/errors.hpp"
#include "fhn/mat2.hpp"
#include "fhn/profile.hpp"
#include "fhn/model.hpp"
#include "fhn/nonlinearity.hpp"
#include "fhn/parallel.hpp"
#include "fhn/noise.hpp"
#include "fhn/stats.hpp"
#include "fhn/solver.hpp"
#include "fhn/ergodics.hpp"
#include "fhn/kolmogorov.hpp"
#include "fhn/io.hpp"
#include "fhn/commands.hpp"

#endif  // FHN_FHN_HPP
