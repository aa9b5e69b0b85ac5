#pragma once

#include "fractura/adapt.hpp"
#include "fractura/alpha.hpp"
#include "fractura/config.hpp"
#include "fractura/errors.hpp"
#include "fractura/fem.hpp"
#include "fractura/geometry.hpp"
#include "fractura/io.hpp"
#include "fractura/linalg.hpp"
#include "fractura/mesh.hpp"
#include "fractura/model.hpp"
#include "fractura/scenario.hpp"
#include "fractura/tintegrate.hpp"
